//! Experiment grid orchestration: train one embedding per (mode, window,
//! dim) cell, score it intrinsically and extrinsically, and assemble the
//! rows into a report plus figure artifacts for the best cell.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{load_corpus, Corpus};
use crate::error::{Error, Result};
use crate::eval::extrinsic::{
    build_classifier, evaluate_classifier, prepare_dataset, train_classifier, ClassifierConfig,
    EpochAccuracy, EvalOutcome, SplitDataset,
};
use crate::eval::intrinsic::{evaluate_intrinsic, wcss_curve, IntrinsicReport, LabeledWordSet};
use crate::preprocess::{preprocess_corpus, PreprocessConfig, PreprocessConfigFile};
use crate::report::{
    render_report, select_best, CellMetrics, Provenance, ReportFormat, SweepReport, SweepRow,
};
use crate::svg;
use crate::vocab::{build_vocab, generate_examples, Mode, Vocabulary};
use crate::word2vec::{extract_embeddings, init_model, train, W2VConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepGrid {
    pub modes: Vec<Mode>,
    pub windows: Vec<usize>,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub base_seed: u64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            modes: vec![Mode::Cbow, Mode::Sg],
            windows: vec![2, 3, 4],
            dims: vec![100, 200, 300, 400, 500],
            base_seed: 0,
        }
    }
}

impl SweepGrid {
    pub fn cell_count(&self) -> usize {
        self.modes.len() * self.windows.len() * self.dims.len()
    }

    /// Cells in deterministic order: mode-major, then window, then dim.
    /// The per-cell seed is `base_seed + cell index`.
    pub fn cells(&self) -> Vec<(Mode, usize, usize, u64)> {
        let mut cells = Vec::with_capacity(self.cell_count());
        let mut index = 0u64;
        for &mode in &self.modes {
            for &window in &self.windows {
                for &dim in &self.dims {
                    cells.push((mode, window, dim, self.base_seed.wrapping_add(index)));
                    index += 1;
                }
            }
        }
        cells
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() || self.windows.is_empty() || self.dims.is_empty() {
            return Err(Error::InvalidInput(
                "sweep grid axes must be non-empty".into(),
            ));
        }
        if self.windows.contains(&0) || self.dims.contains(&0) {
            return Err(Error::InvalidInput(
                "windows and dims must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Embedding-training knobs shared by every cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct W2VParams {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub min_count: u64,
}

impl Default for W2VParams {
    fn default() -> Self {
        W2VParams {
            lr: 0.01,
            batch_size: 256,
            epochs: 5,
            min_count: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub grid: SweepGrid,
    pub w2v: W2VParams,
    pub classifier: ClassifierConfig,
    pub preprocess: PreprocessConfig,
}

/// Everything the best cell needs for its figure artifacts.
#[derive(Debug, Clone)]
pub struct CellArtifacts {
    pub intrinsic: IntrinsicReport,
    pub wcss: Vec<(usize, f64)>,
    pub accuracy: Vec<EpochAccuracy>,
    pub outcome: EvalOutcome,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub report: SweepReport,
    /// Parallel to `report.rows`; None for failed cells.
    pub artifacts: Vec<Option<CellArtifacts>>,
}

fn corpus_sha256(corpus: &Corpus) -> String {
    let mut hasher = Sha256::new();
    for article in &corpus.articles {
        hasher.update(article.id.as_bytes());
        hasher.update([0x1f]);
        hasher.update(article.category.as_bytes());
        hasher.update([0x1f]);
        hasher.update(article.text.as_bytes());
        hasher.update([0x1e]);
    }
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Inputs shared by every cell: the cleaned corpus, its vocabulary, the
/// labeled word set, and the classifier splits.
struct SweepContext<'a> {
    sentences: Vec<crate::preprocess::CleanSentence>,
    vocab: Vocabulary,
    labeled: &'a LabeledWordSet,
    dataset: SplitDataset,
}

fn run_cell(
    mode: Mode,
    window: usize,
    dim: usize,
    seed: u64,
    spec: &SweepSpec,
    ctx: &SweepContext,
) -> Result<(CellMetrics, CellArtifacts)> {
    let examples: Vec<_> = generate_examples(&ctx.sentences, &ctx.vocab, window, mode).collect();
    let config = W2VConfig {
        mode,
        dim,
        window,
        lr: spec.w2v.lr,
        batch_size: spec.w2v.batch_size,
        epochs: spec.w2v.epochs,
        seed,
    };
    let mut model = init_model(dim, ctx.vocab.size(), seed)?;
    train(&mut model, &examples, &config)?;
    let embeddings = extract_embeddings(&model, &ctx.vocab);

    let intrinsic = evaluate_intrinsic(&embeddings, ctx.labeled, seed)?;
    let points: Vec<[f64; 2]> = intrinsic.scatter.iter().map(|r| [r.x, r.y]).collect();
    let k_max = 10.min(points.len());
    let wcss = wcss_curve(&points, 1..=k_max, seed)?;

    let clf_config = ClassifierConfig {
        seed,
        ..spec.classifier.clone()
    };
    let mut classifier = build_classifier(&embeddings, &clf_config, seed)?;
    let accuracy = train_classifier(&mut classifier, &ctx.dataset, &clf_config)?;
    let outcome = evaluate_classifier(&classifier, &ctx.dataset.test)?;

    let metrics = CellMetrics {
        purity: intrinsic.purity,
        nmi: intrinsic.nmi,
        precision: outcome.precision,
        recall: outcome.recall,
        f1: outcome.f1,
    };
    Ok((
        metrics,
        CellArtifacts {
            intrinsic,
            wcss,
            accuracy,
            outcome,
        },
    ))
}

/// Runs every grid cell, collecting per-cell artifacts. Cell failures are
/// recorded in their row without aborting the sweep; only a fully failed
/// grid is an error.
pub fn run_sweep_full(
    spec: &SweepSpec,
    corpus: &Corpus,
    labeled: &LabeledWordSet,
    label_map: &HashMap<String, usize>,
) -> Result<SweepOutcome> {
    spec.grid.validate()?;
    let sentences: Vec<_> = preprocess_corpus(corpus, &spec.preprocess)
        .into_iter()
        .flatten()
        .collect();
    let vocab = build_vocab(&sentences, spec.w2v.min_count)?;
    let dataset = prepare_dataset(
        corpus,
        &spec.preprocess,
        &vocab,
        label_map,
        &spec.classifier,
        spec.grid.base_seed,
    )?;
    let ctx = SweepContext {
        sentences,
        vocab,
        labeled,
        dataset,
    };

    let mut rows = Vec::with_capacity(spec.grid.cell_count());
    let mut artifacts = Vec::with_capacity(spec.grid.cell_count());
    for (mode, window, dim, seed) in spec.grid.cells() {
        match run_cell(mode, window, dim, seed, spec, &ctx) {
            Ok((metrics, cell_artifacts)) => {
                rows.push(SweepRow {
                    mode,
                    window,
                    dim,
                    seed,
                    metrics: Some(metrics),
                    error: None,
                });
                artifacts.push(Some(cell_artifacts));
            }
            Err(e) => {
                rows.push(SweepRow {
                    mode,
                    window,
                    dim,
                    seed,
                    metrics: None,
                    error: Some(e.to_string()),
                });
                artifacts.push(None);
            }
        }
    }
    if rows.iter().all(|r| r.metrics.is_none()) {
        return Err(Error::SweepFailed(rows.len()));
    }
    let best = select_best(&rows)?;
    Ok(SweepOutcome {
        report: SweepReport {
            rows,
            best: Some(best),
            provenance: Provenance {
                base_seed: spec.grid.base_seed,
                corpus_sha256: corpus_sha256(corpus),
            },
        },
        artifacts,
    })
}

/// Grid run without the artifact payload.
pub fn run_sweep(
    spec: &SweepSpec,
    corpus: &Corpus,
    labeled: &LabeledWordSet,
    label_map: &HashMap<String, usize>,
) -> Result<SweepReport> {
    run_sweep_full(spec, corpus, labeled, label_map).map(|o| o.report)
}

/// On-disk sweep configuration; resource paths resolve relative to the
/// config file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepFileConfig {
    pub corpus: String,
    pub labeled_set: String,
    pub label_map: String,
    #[serde(default)]
    pub preprocess: PreprocessConfigFile,
    #[serde(default)]
    pub grid: SweepGrid,
    #[serde(default)]
    pub w2v: W2VParams,
    #[serde(default)]
    pub classifier: ClassifierConfig,
}

pub struct LoadedSweep {
    pub spec: SweepSpec,
    pub corpus: Corpus,
    pub labeled: LabeledWordSet,
    pub label_map: HashMap<String, usize>,
}

pub fn load_sweep_config(path: &Path) -> Result<LoadedSweep> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SweepFileConfig =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let corpus = load_corpus(&base.join(&file.corpus))?;
    let labeled = LabeledWordSet::load(&base.join(&file.labeled_set))?;
    let label_map = load_label_map(&base.join(&file.label_map))?;
    let preprocess = file.preprocess.resolve(base)?;
    Ok(LoadedSweep {
        spec: SweepSpec {
            grid: file.grid,
            w2v: file.w2v,
            classifier: file.classifier,
            preprocess,
        },
        corpus,
        labeled,
        label_map,
    })
}

pub fn load_label_map(path: &Path) -> Result<HashMap<String, usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn scatter_csv(report: &IntrinsicReport) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in &report.scatter {
        writer
            .serialize(row)
            .map_err(|e| Error::InvalidInput(format!("scatter csv: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("scatter csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

fn wcss_csv(curve: &[(usize, f64)]) -> String {
    let mut out = String::from("k,wcss\n");
    for (k, wcss) in curve {
        out.push_str(&format!("{k},{wcss}\n"));
    }
    out
}

fn accuracy_csv(curves: &[EpochAccuracy]) -> String {
    let mut out = String::from("epoch,train_acc,val_acc\n");
    for c in curves {
        out.push_str(&format!("{},{},{}\n", c.epoch, c.train_acc, c.val_acc));
    }
    out
}

/// Writes the figure-artifact set for one evaluated cell into `dir`:
/// scatter CSV/SVG, WCSS CSV/SVG, accuracy CSV, confusion SVG.
pub fn write_cell_artifacts(
    cell: &CellArtifacts,
    dir: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    write_file(dir, "scatter.csv", &scatter_csv(&cell.intrinsic)?, written)?;
    write_file(
        dir,
        "scatter.svg",
        &svg::scatter_svg(&cell.intrinsic.scatter, "Labeled words in PCA space"),
        written,
    )?;
    write_file(dir, "wcss.csv", &wcss_csv(&cell.wcss), written)?;
    let curve_points: Vec<(f64, f64)> = cell.wcss.iter().map(|&(k, w)| (k as f64, w)).collect();
    write_file(
        dir,
        "wcss.svg",
        &svg::line_chart_svg(&curve_points, "WCSS vs cluster count", "k", "wcss"),
        written,
    )?;
    write_file(dir, "accuracy.csv", &accuracy_csv(&cell.accuracy), written)?;
    write_file(
        dir,
        "confusion.svg",
        &svg::confusion_heatmap_svg(&cell.outcome.confusion, "Classifier confusion matrix"),
        written,
    )?;
    Ok(())
}

/// Runs the sweep and writes `report.{csv,md,json}` plus the best cell's
/// figure artifacts under `out_dir`. Returns the written paths.
pub fn run_and_write(loaded: &LoadedSweep, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let outcome = run_sweep_full(
        &loaded.spec,
        &loaded.corpus,
        &loaded.labeled,
        &loaded.label_map,
    )?;
    let mut written = Vec::new();
    write_file(
        out_dir,
        "report.csv",
        &render_report(&outcome.report, ReportFormat::Csv)?,
        &mut written,
    )?;
    write_file(
        out_dir,
        "report.md",
        &render_report(&outcome.report, ReportFormat::Markdown)?,
        &mut written,
    )?;
    write_file(
        out_dir,
        "report.json",
        &render_report(&outcome.report, ReportFormat::Json)?,
        &mut written,
    )?;
    if let Some(best) = outcome.report.best {
        if let Some(cell) = &outcome.artifacts[best] {
            write_cell_artifacts(cell, out_dir, &mut written)?;
        }
    }
    Ok(written)
}
