//! Sweep report: one row per grid cell with intrinsic and extrinsic scores,
//! best-cell selection, and CSV / markdown / JSON rendering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub purity: f64,
    pub nmi: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: Mode,
    pub window: usize,
    pub dim: usize,
    pub seed: u64,
    pub metrics: Option<CellMetrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub base_seed: u64,
    pub corpus_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Index into `rows` of the selected best cell.
    pub best: Option<usize>,
    pub provenance: Provenance,
}

/// Picks the winning row: highest F1, ties broken by NMI, purity, smaller
/// dim, smaller window, then SG before CBOW. Failed rows never win.
pub fn select_best(rows: &[SweepRow]) -> Result<usize> {
    let mode_rank = |m: Mode| match m {
        Mode::Sg => 0u8,
        Mode::Cbow => 1,
    };
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| r.metrics.map(|m| (i, r, m)))
        .max_by(|(_, ra, ma), (_, rb, mb)| {
            ma.f1
                .total_cmp(&mb.f1)
                .then(ma.nmi.total_cmp(&mb.nmi))
                .then(ma.purity.total_cmp(&mb.purity))
                .then(rb.dim.cmp(&ra.dim))
                .then(rb.window.cmp(&ra.window))
                .then(mode_rank(rb.mode).cmp(&mode_rank(ra.mode)))
        })
        .map(|(i, _, _)| i)
        .ok_or_else(|| Error::InvalidInput("no successful sweep rows".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" | "markdown-table" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidInput(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRecord {
    mode: Mode,
    window: usize,
    dim: usize,
    seed: u64,
    status: String,
    purity: Option<f64>,
    nmi: Option<f64>,
    precision: Option<f64>,
    recall: Option<f64>,
    f1: Option<f64>,
    best: bool,
    error: Option<String>,
}

pub fn render_report(report: &SweepReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => Ok(render_markdown(report)),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            Ok(s)
        }
    }
}

fn render_csv(report: &SweepReport) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for (i, row) in report.rows.iter().enumerate() {
        let record = CsvRecord {
            mode: row.mode,
            window: row.window,
            dim: row.dim,
            seed: row.seed,
            status: if row.metrics.is_some() {
                "ok"
            } else {
                "failed"
            }
            .into(),
            purity: row.metrics.map(|m| m.purity),
            nmi: row.metrics.map(|m| m.nmi),
            precision: row.metrics.map(|m| m.precision),
            recall: row.metrics.map(|m| m.recall),
            f1: row.metrics.map(|m| m.f1),
            best: report.best == Some(i),
            error: row.error.clone(),
        };
        writer
            .serialize(record)
            .map_err(|e| Error::InvalidInput(format!("csv render: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv render: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads back a CSV report: the rows plus the highlighted best index.
pub fn parse_report_csv(text: &str) -> Result<(Vec<SweepRow>, Option<usize>)> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut best = None;
    for (i, record) in reader.deserialize::<CsvRecord>().enumerate() {
        let record = record.map_err(|e| Error::InvalidInput(format!("csv row {}: {e}", i + 1)))?;
        let metrics = match (
            record.purity,
            record.nmi,
            record.precision,
            record.recall,
            record.f1,
        ) {
            (Some(purity), Some(nmi), Some(precision), Some(recall), Some(f1)) => {
                Some(CellMetrics {
                    purity,
                    nmi,
                    precision,
                    recall,
                    f1,
                })
            }
            _ => None,
        };
        if record.best {
            best = Some(i);
        }
        rows.push(SweepRow {
            mode: record.mode,
            window: record.window,
            dim: record.dim,
            seed: record.seed,
            metrics,
            error: record.error,
        });
    }
    Ok((rows, best))
}

/// Grid layout grouped by window: one line per (window, dim), metric columns
/// per mode. The best cell's F1 carries the only bold marker.
fn render_markdown(report: &SweepReport) -> String {
    let mut modes: Vec<Mode> = Vec::new();
    let mut windows: Vec<usize> = Vec::new();
    let mut dims: Vec<usize> = Vec::new();
    for row in &report.rows {
        if !modes.contains(&row.mode) {
            modes.push(row.mode);
        }
        if !windows.contains(&row.window) {
            windows.push(row.window);
        }
        if !dims.contains(&row.dim) {
            dims.push(row.dim);
        }
    }
    windows.sort_unstable();
    dims.sort_unstable();

    let mut out = String::new();
    out.push_str("| Window | Dim |");
    for mode in &modes {
        for metric in ["Purity", "NMI", "Precision", "Recall", "F1"] {
            out.push_str(&format!(" {mode} {metric} |"));
        }
    }
    out.push('\n');
    out.push_str("|---|---|");
    for _ in 0..modes.len() * 5 {
        out.push_str("---|");
    }
    out.push('\n');

    let find = |mode: Mode, window: usize, dim: usize| {
        report
            .rows
            .iter()
            .position(|r| r.mode == mode && r.window == window && r.dim == dim)
    };
    for &window in &windows {
        for &dim in &dims {
            out.push_str(&format!("| {window} | {dim} |"));
            for &mode in &modes {
                match find(mode, window, dim) {
                    Some(i) => match report.rows[i].metrics {
                        Some(m) => {
                            let f1 = if report.best == Some(i) {
                                format!("**{:.3}**", m.f1)
                            } else {
                                format!("{:.3}", m.f1)
                            };
                            out.push_str(&format!(
                                " {:.3} | {:.3} | {:.3} | {:.3} | {f1} |",
                                m.purity, m.nmi, m.precision, m.recall
                            ));
                        }
                        None => out.push_str(" failed | — | — | — | — |"),
                    },
                    None => out.push_str(" — | — | — | — | — |"),
                }
            }
            out.push('\n');
        }
    }
    out
}
