//! Small self-contained SVG emitters for the workbench's figure artifacts:
//! WCSS elbow curves, 2-D word scatter plots, and confusion-matrix heatmaps.

use std::fmt::Write;

use crate::eval::extrinsic::ConfusionMatrix;
use crate::eval::intrinsic::ScatterRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn open_svg(title: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = write!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/><text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

struct Scale {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Scale {
    fn from_bounds(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        let pad = |lo: f64, hi: f64| {
            let span = (hi - lo).abs().max(1e-9);
            (lo - 0.05 * span, hi + 0.05 * span)
        };
        let (x_min, x_max) = pad(x_min, x_max);
        let (y_min, y_max) = pad(y_min, y_max);
        Scale {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn axes(s: &mut String, scale: &Scale, x_label: &str, y_label: &str) {
    let _ = write!(
        s,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    );
    let _ = write!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = write!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (v, label_x) in [(scale.x_min, true), (scale.x_max, true)] {
        let _ = label_x;
        let _ = write!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{:.3}</text>"#,
            scale.x(v),
            HEIGHT - MARGIN + 16.0,
            v
        );
    }
    for v in [scale.y_min, scale.y_max] {
        let _ = write!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="10">{:.3}</text>"#,
            MARGIN - 6.0,
            scale.y(v) + 4.0,
            v
        );
    }
}

/// Polyline chart of `(x, y)` points, e.g. a cluster-count vs WCSS elbow.
pub fn line_chart_svg(points: &[(f64, f64)], title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = open_svg(title);
    if !points.is_empty() {
        let x_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let x_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let y_min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let y_max = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let scale = Scale::from_bounds(x_min, x_max, y_min, y_max);
        axes(&mut s, &scale, x_label, y_label);
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", scale.x(x), scale.y(y)))
            .collect();
        let _ = write!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            PALETTE[0],
            path.join(" ")
        );
        for &(x, y) in points {
            let _ = write!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                scale.x(x),
                scale.y(y),
                PALETTE[0]
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter plot of labeled words: fill encodes the k-means cluster, stroke
/// the ground-truth class.
pub fn scatter_svg(rows: &[ScatterRow], title: &str) -> String {
    let mut s = open_svg(title);
    if !rows.is_empty() {
        let x_min = rows.iter().map(|r| r.x).fold(f64::INFINITY, f64::min);
        let x_max = rows.iter().map(|r| r.x).fold(f64::NEG_INFINITY, f64::max);
        let y_min = rows.iter().map(|r| r.y).fold(f64::INFINITY, f64::min);
        let y_max = rows.iter().map(|r| r.y).fold(f64::NEG_INFINITY, f64::max);
        let scale = Scale::from_bounds(x_min, x_max, y_min, y_max);
        axes(&mut s, &scale, "pc1", "pc2");
        let mut classes: Vec<&str> = rows.iter().map(|r| r.true_class.as_str()).collect();
        classes.sort_unstable();
        classes.dedup();
        for row in rows {
            let class_id = classes.binary_search(&row.true_class.as_str()).unwrap_or(0);
            let _ = write!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}" stroke="{}" stroke-width="1.5"/>"#,
                scale.x(row.x),
                scale.y(row.y),
                PALETTE[row.cluster % PALETTE.len()],
                PALETTE[class_id % PALETTE.len()],
            );
            let _ = write!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="9">{}</text>"#,
                scale.x(row.x) + 6.0,
                scale.y(row.y) + 3.0,
                escape(&row.word)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Confusion-matrix heatmap; rows are true classes, columns predictions.
pub fn confusion_heatmap_svg(matrix: &ConfusionMatrix, title: &str) -> String {
    let mut s = open_svg(title);
    let n = matrix.classes();
    if n > 0 {
        let max = matrix
            .counts
            .iter()
            .flatten()
            .copied()
            .max()
            .unwrap_or(0)
            .max(1) as f64;
        let grid = (WIDTH.min(HEIGHT) - 2.0 * MARGIN) / n as f64;
        for (i, row) in matrix.counts.iter().enumerate() {
            for (j, &count) in row.iter().enumerate() {
                let x = MARGIN + j as f64 * grid;
                let y = MARGIN + i as f64 * grid;
                let opacity = count as f64 / max;
                let _ = write!(
                    s,
                    r##"<rect x="{x:.2}" y="{y:.2}" width="{grid:.2}" height="{grid:.2}" fill="{}" fill-opacity="{opacity:.3}" stroke="#ccc"/>"##,
                    PALETTE[0]
                );
                let _ = write!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{count}</text>"#,
                    x + grid / 2.0,
                    y + grid / 2.0 + 4.0
                );
            }
            let _ = write!(
                s,
                r#"<text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">true {i}</text>"#,
                MARGIN - 8.0,
                MARGIN + i as f64 * grid + grid / 2.0 + 4.0
            );
            let _ = write!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">pred {i}</text>"#,
                MARGIN + i as f64 * grid + grid / 2.0,
                MARGIN + n as f64 * grid + 16.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
