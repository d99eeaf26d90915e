//! Command-line front end for the embedlab workbench: corpus statistics,
//! preprocessing, embedding training, nearest-neighbor inspection, intrinsic
//! and extrinsic evaluation, and the full hyperparameter sweep.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use embedlab::corpus::{compute_stats, load_corpus};
use embedlab::eval::extrinsic::{
    build_classifier, evaluate_classifier, prepare_dataset, train_classifier, ClassifierConfig,
};
use embedlab::eval::intrinsic::{evaluate_intrinsic, wcss_curve, LabeledWordSet};
use embedlab::preprocess::{preprocess_corpus, tokenize_corpus, PreprocessConfigFile};
use embedlab::report::{parse_report_csv, render_report, ReportFormat, SweepReport};
use embedlab::svg;
use embedlab::sweep::{load_label_map, load_sweep_config, run_and_write, W2VParams};
use embedlab::vocab::{build_vocab, generate_examples, Mode, Vocabulary};
use embedlab::word2vec::{
    extract_embeddings, init_model, load_embeddings, nearest_neighbors, save_embeddings, train,
    W2VConfig,
};

#[derive(Parser)]
#[command(
    name = "embedlab",
    version,
    about = "Train word embeddings, sweep hyperparameters, and benchmark the results"
)]
struct Cli {
    /// Base RNG seed (overrides the config file's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for generated files.
    #[arg(long, global = true, env = "EMBEDLAB_OUT")]
    out: Option<PathBuf>,

    /// JSON config file (preprocess/model settings; full grid for `sweep`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics: counts and per-article/sentence ratios.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        /// Compute over cleaned tokens (stopwords removed, stemmed) instead
        /// of raw tokens.
        #[arg(long)]
        cleaned: bool,
    },
    /// Run the cleaning pipeline and dump tokenized sentences as JSONL.
    Preprocess {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Train a single embedding configuration.
    Train(TrainArgs),
    /// Nearest neighbors of a word by cosine similarity.
    Neighbors {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
    /// Cluster labeled words and score purity/NMI; emits scatter and WCSS
    /// figure data.
    EvalIntrinsic {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        labeled_set: PathBuf,
    },
    /// Train the news classifier on frozen embeddings and report
    /// precision/recall/F1 plus the confusion matrix.
    EvalExtrinsic {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        label_map: PathBuf,
    },
    /// Run the full (mode, window, dim) grid from the config file.
    Sweep,
    /// Re-render an existing report CSV as csv, markdown, or json.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "sg")]
    mode: String,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    window: usize,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    min_count: Option<u64>,
}

/// Settings shared by the non-sweep commands; `sweep` reads the richer
/// schema via [`load_sweep_config`]. Unknown keys are ignored, so one file
/// can serve both.
#[derive(Default, serde::Deserialize)]
#[serde(default)]
struct CliConfig {
    preprocess: PreprocessConfigFile,
    w2v: W2VParams,
    classifier: ClassifierConfig,
}

fn load_cli_config(path: Option<&Path>) -> Result<(CliConfig, PathBuf)> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let cfg: CliConfig =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            let base = p.parent().unwrap_or(Path::new(".")).to_path_buf();
            Ok((cfg, base))
        }
        None => Ok((CliConfig::default(), PathBuf::from("."))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("embedlab-out"));
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    let seed = cli.seed.unwrap_or(0);

    let (command_name, files) = match &cli.command {
        Command::Stats { corpus, cleaned } => (
            "stats",
            cmd_stats(corpus, *cleaned, cli.config.as_deref(), &out_dir)?,
        ),
        Command::Preprocess { corpus } => (
            "preprocess",
            cmd_preprocess(corpus, cli.config.as_deref(), &out_dir)?,
        ),
        Command::Train(args) => (
            "train",
            cmd_train(args, cli.config.as_deref(), seed, &out_dir)?,
        ),
        Command::Neighbors {
            embeddings,
            word,
            k,
        } => ("neighbors", cmd_neighbors(embeddings, word, *k, &out_dir)?),
        Command::EvalIntrinsic {
            embeddings,
            labeled_set,
        } => (
            "eval-intrinsic",
            cmd_eval_intrinsic(embeddings, labeled_set, seed, &out_dir)?,
        ),
        Command::EvalExtrinsic {
            embeddings,
            corpus,
            label_map,
        } => (
            "eval-extrinsic",
            cmd_eval_extrinsic(
                embeddings,
                corpus,
                label_map,
                cli.config.as_deref(),
                seed,
                &out_dir,
            )?,
        ),
        Command::Sweep => (
            "sweep",
            cmd_sweep(cli.config.as_deref(), cli.seed, &out_dir)?,
        ),
        Command::Report { input, format } => ("report", cmd_report(input, format, &out_dir)?),
    };

    write_manifest(&out_dir, command_name, &files)?;
    Ok(())
}

fn write_manifest(out_dir: &Path, command: &str, files: &[PathBuf]) -> Result<()> {
    let names: Vec<String> = files
        .iter()
        .map(|p| {
            p.strip_prefix(out_dir)
                .unwrap_or(p)
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    let manifest = serde_json::json!({
        "command": command,
        "out_dir": out_dir.to_string_lossy(),
        "files": names,
        "unix_time": SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs(),
    });
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}

fn write_out(out_dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = out_dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);
    Ok(())
}

fn cmd_stats(
    corpus_path: &Path,
    cleaned: bool,
    config: Option<&Path>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let (cfg, base) = load_cli_config(config)?;
    let pre = cfg.preprocess.resolve(&base)?;
    let corpus = load_corpus(corpus_path)?;
    let tokenized = if cleaned {
        preprocess_corpus(&corpus, &pre)
            .into_iter()
            .map(|article| article.into_iter().map(|s| s.tokens).collect())
            .collect()
    } else {
        tokenize_corpus(&corpus, &pre)
    };
    let stats = compute_stats(&corpus, &tokenized)?;
    let json = serde_json::to_string_pretty(&stats)? + "\n";
    print!("{json}");
    let mut files = Vec::new();
    write_out(out_dir, "stats.json", &json, &mut files)?;
    Ok(files)
}

fn cmd_preprocess(
    corpus_path: &Path,
    config: Option<&Path>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let (cfg, base) = load_cli_config(config)?;
    let pre = cfg.preprocess.resolve(&base)?;
    let corpus = load_corpus(corpus_path)?;
    let cleaned = preprocess_corpus(&corpus, &pre);
    let mut lines = String::new();
    let mut sentence_count = 0usize;
    for (article, sentences) in corpus.articles.iter().zip(&cleaned) {
        sentence_count += sentences.len();
        let tokens: Vec<&[String]> = sentences.iter().map(|s| s.tokens.as_slice()).collect();
        lines.push_str(&serde_json::to_string(&serde_json::json!({
            "id": article.id,
            "category": article.category,
            "sentences": tokens,
        }))?);
        lines.push('\n');
    }
    println!(
        "{} articles -> {} clean sentences",
        corpus.len(),
        sentence_count
    );
    let mut files = Vec::new();
    write_out(out_dir, "sentences.jsonl", &lines, &mut files)?;
    Ok(files)
}

fn cmd_train(
    args: &TrainArgs,
    config: Option<&Path>,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let (cfg, base) = load_cli_config(config)?;
    let pre = cfg.preprocess.resolve(&base)?;
    let corpus = load_corpus(&args.corpus)?;
    let sentences: Vec<_> = preprocess_corpus(&corpus, &pre)
        .into_iter()
        .flatten()
        .collect();
    let min_count = args.min_count.unwrap_or(cfg.w2v.min_count);
    let vocab = build_vocab(&sentences, min_count)?;
    let mode: Mode = args.mode.parse()?;
    let w2v = W2VConfig {
        mode,
        dim: args.dim,
        window: args.window,
        lr: args.lr.unwrap_or(cfg.w2v.lr),
        batch_size: args.batch_size.unwrap_or(cfg.w2v.batch_size),
        epochs: args.epochs.unwrap_or(cfg.w2v.epochs),
        seed,
    };
    let examples: Vec<_> = generate_examples(&sentences, &vocab, w2v.window, mode).collect();
    let mut model = init_model(w2v.dim, vocab.size(), seed)?;
    let history = train(&mut model, &examples, &w2v)?;
    let embeddings = extract_embeddings(&model, &vocab);

    let mut files = Vec::new();
    let emb_path = out_dir.join("embeddings.txt");
    save_embeddings(&embeddings, &emb_path)?;
    files.push(emb_path);
    let vocab_path = out_dir.join("vocab.tsv");
    vocab.save(&vocab_path)?;
    files.push(vocab_path);
    let mut loss_csv = String::from("epoch,loss\n");
    for (i, loss) in history.iter().enumerate() {
        loss_csv.push_str(&format!("{},{}\n", i + 1, loss));
    }
    write_out(out_dir, "loss.csv", &loss_csv, &mut files)?;
    println!(
        "trained {mode} dim={} window={} on {} examples; final epoch loss {:.6}",
        w2v.dim,
        w2v.window,
        examples.len(),
        history.last().copied().unwrap_or(f64::NAN)
    );
    Ok(files)
}

fn cmd_neighbors(
    embeddings_path: &Path,
    word: &str,
    k: usize,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let embeddings = load_embeddings(embeddings_path)?;
    let hits = nearest_neighbors(&embeddings, word, k)?;
    let mut tsv = String::new();
    for (neighbor, cosine) in &hits {
        let line = format!("{neighbor}\t{cosine:.6}");
        println!("{line}");
        tsv.push_str(&line);
        tsv.push('\n');
    }
    let mut files = Vec::new();
    write_out(out_dir, "neighbors.tsv", &tsv, &mut files)?;
    Ok(files)
}

fn cmd_eval_intrinsic(
    embeddings_path: &Path,
    labeled_path: &Path,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let embeddings = load_embeddings(embeddings_path)?;
    let labeled = LabeledWordSet::load(labeled_path)?;
    let report = evaluate_intrinsic(&embeddings, &labeled, seed)?;
    let points: Vec<[f64; 2]> = report.scatter.iter().map(|r| [r.x, r.y]).collect();
    let curve = wcss_curve(&points, 1..=10.min(points.len()), seed)?;

    let json = serde_json::to_string_pretty(&serde_json::json!({
        "purity": report.purity,
        "nmi": report.nmi,
        "words": report.scatter.len(),
    }))? + "\n";
    print!("{json}");

    let mut files = Vec::new();
    write_out(out_dir, "intrinsic.json", &json, &mut files)?;
    let mut scatter_csv = String::from("word,x,y,cluster,true_class\n");
    for row in &report.scatter {
        scatter_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.word, row.x, row.y, row.cluster, row.true_class
        ));
    }
    write_out(out_dir, "scatter.csv", &scatter_csv, &mut files)?;
    write_out(
        out_dir,
        "scatter.svg",
        &svg::scatter_svg(&report.scatter, "Labeled words in PCA space"),
        &mut files,
    )?;
    let mut wcss_csv = String::from("k,wcss\n");
    for (k, w) in &curve {
        wcss_csv.push_str(&format!("{k},{w}\n"));
    }
    write_out(out_dir, "wcss.csv", &wcss_csv, &mut files)?;
    let curve_points: Vec<(f64, f64)> = curve.iter().map(|&(k, w)| (k as f64, w)).collect();
    write_out(
        out_dir,
        "wcss.svg",
        &svg::line_chart_svg(&curve_points, "WCSS vs cluster count", "k", "wcss"),
        &mut files,
    )?;
    Ok(files)
}

fn cmd_eval_extrinsic(
    embeddings_path: &Path,
    corpus_path: &Path,
    label_map_path: &Path,
    config: Option<&Path>,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let (cfg, base) = load_cli_config(config)?;
    let pre = cfg.preprocess.resolve(&base)?;
    let embeddings = load_embeddings(embeddings_path)?;
    let corpus = load_corpus(corpus_path)?;
    let label_map: HashMap<String, usize> = load_label_map(label_map_path)?;
    let vocab = Vocabulary::from_words(embeddings.words())?;
    let clf_cfg = ClassifierConfig {
        seed,
        classes: label_map.len(),
        ..cfg.classifier
    };
    let dataset = prepare_dataset(&corpus, &pre, &vocab, &label_map, &clf_cfg, seed)?;
    let mut model = build_classifier(&embeddings, &clf_cfg, seed)?;
    let accuracy = train_classifier(&mut model, &dataset, &clf_cfg)?;
    let outcome = evaluate_classifier(&model, &dataset.test)?;

    let json = serde_json::to_string_pretty(&serde_json::json!({
        "precision": outcome.precision,
        "recall": outcome.recall,
        "f1": outcome.f1,
        "confusion": outcome.confusion.counts,
        "degenerate_classes": outcome.degenerate_classes,
        "dropped_articles": dataset.dropped,
    }))? + "\n";
    print!("{json}");

    let mut files = Vec::new();
    write_out(out_dir, "extrinsic.json", &json, &mut files)?;
    let mut acc_csv = String::from("epoch,train_acc,val_acc\n");
    for c in &accuracy {
        acc_csv.push_str(&format!("{},{},{}\n", c.epoch, c.train_acc, c.val_acc));
    }
    write_out(out_dir, "accuracy.csv", &acc_csv, &mut files)?;
    write_out(
        out_dir,
        "confusion.svg",
        &svg::confusion_heatmap_svg(&outcome.confusion, "Classifier confusion matrix"),
        &mut files,
    )?;
    Ok(files)
}

fn cmd_sweep(config: Option<&Path>, seed: Option<u64>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let config = config.context("sweep requires --config pointing to a sweep JSON file")?;
    let mut loaded = load_sweep_config(config)?;
    if let Some(s) = seed {
        loaded.spec.grid.base_seed = s;
    }
    let files = run_and_write(&loaded, out_dir)?;
    let report_json = fs::read_to_string(out_dir.join("report.json"))?;
    let report: SweepReport = serde_json::from_str(&report_json)?;
    if let Some(best) = report.best {
        let row = &report.rows[best];
        let m = row.metrics.expect("best row has metrics");
        println!(
            "best cell: {} window={} dim={} -> purity {:.3}, nmi {:.3}, f1 {:.3}",
            row.mode, row.window, row.dim, m.purity, m.nmi, m.f1
        );
    }
    Ok(files)
}

fn cmd_report(input: &Path, format: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let format: ReportFormat = format.parse()?;
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let (rows, best) = parse_report_csv(&text)?;
    if rows.is_empty() {
        bail!("report {} contains no rows", input.display());
    }
    let report = SweepReport {
        rows,
        best,
        provenance: Default::default(),
    };
    let rendered = render_report(&report, format)?;
    print!("{rendered}");
    let name = match format {
        ReportFormat::Csv => "report.csv",
        ReportFormat::Markdown => "report.md",
        ReportFormat::Json => "report.json",
    };
    let mut files = Vec::new();
    write_out(out_dir, name, &rendered, &mut files)?;
    Ok(files)
}
