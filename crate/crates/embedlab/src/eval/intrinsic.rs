//! Intrinsic embedding evaluation: project labeled word vectors to 2-D with
//! PCA, cluster with k-means, and score the clustering against ground-truth
//! classes with purity and normalized mutual information.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::word2vec::EmbeddingMatrix;

/// Ground-truth word classes; classes are kept in name order so class ids
/// are stable across runs.
#[derive(Debug, Clone)]
pub struct LabeledWordSet {
    classes: Vec<(String, Vec<String>)>,
}

impl LabeledWordSet {
    pub fn from_pairs(pairs: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (class, words) in &pairs {
            if words.is_empty() {
                return Err(Error::InvalidInput(format!("class {class:?} has no words")));
            }
            for w in words {
                if !seen.insert(w.clone()) {
                    return Err(Error::InvalidInput(format!(
                        "word {w:?} appears in more than one class"
                    )));
                }
            }
        }
        let mut classes = pairs;
        classes.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(LabeledWordSet { classes })
    }

    /// Loads `{class: [words]}` JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map: BTreeMap<String, Vec<String>> =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        Self::from_pairs(map.into_iter().collect())
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn total_words(&self) -> usize {
        self.classes.iter().map(|(_, w)| w.len()).sum()
    }

    pub fn classes(&self) -> &[(String, Vec<String>)] {
        &self.classes
    }

    /// `(word, class_id)` pairs in class order then listed word order.
    pub fn labeled_words(&self) -> Vec<(&str, usize)> {
        self.classes
            .iter()
            .enumerate()
            .flat_map(|(id, (_, words))| words.iter().map(move |w| (w.as_str(), id)))
            .collect()
    }
}

/// Projects the mean-centered rows onto their top-2 principal components
/// (via SVD). Each component's sign is fixed so its largest-magnitude
/// loading is positive.
pub fn pca_project(points: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    let m = points.len();
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "PCA needs at least 2 points, got {m}"
        )));
    }
    let d = points[0].len();
    if d < 2 {
        return Err(Error::InvalidInput(format!(
            "PCA to 2 dimensions needs input dimension >= 2, got {d}"
        )));
    }
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidInput("ragged point matrix".into()));
    }
    let mut means = vec![0.0; d];
    for p in points {
        for (mj, v) in means.iter_mut().zip(p) {
            *mj += v;
        }
    }
    for mj in &mut means {
        *mj /= m as f64;
    }
    let centered = DMatrix::from_fn(m, d, |i, j| points[i][j] - means[j]);
    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");

    // Singular values come back sorted, but make the order explicit and the
    // tie-break deterministic.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let mut components = [vec![0.0; d], vec![0.0; d]];
    for (c, comp) in components.iter_mut().enumerate() {
        let row = order[c];
        for j in 0..d {
            comp[j] = v_t[(row, j)];
        }
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if comp[lead] < 0.0 {
            for v in comp.iter_mut() {
                *v = -*v;
            }
        }
    }

    Ok((0..m)
        .map(|i| {
            let mut out = [0.0; 2];
            for (c, comp) in components.iter().enumerate() {
                out[c] = (0..d).map(|j| centered[(i, j)] * comp[j]).sum();
            }
            out
        })
        .collect())
}

/// One k-means run: assignments, centroids, final within-cluster sum of
/// squares, and the per-iteration WCSS trace.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<[f64; 2]>,
    pub wcss: f64,
    pub iterations: usize,
    pub wcss_trace: Vec<f64>,
}

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest_centroid(p: &[f64; 2], centroids: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// k-means++ seeding: first centroid uniform, then proportional to the
/// squared distance from the nearest chosen centroid.
fn kmeans_pp_init(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())]);
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.gen_range(0..points.len())
        };
        centroids.push(points[next]);
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, centroids.last().unwrap()));
        }
    }
    centroids
}

const KMEANS_SHIFT_TOL: f64 = 1e-6;
const KMEANS_MAX_ITERS: usize = 300;

fn lloyd(points: &[[f64; 2]], mut centroids: Vec<[f64; 2]>) -> ClusteringResult {
    let k = centroids.len();
    let mut assignments = vec![0usize; points.len()];
    let mut wcss;
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        wcss = 0.0;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (i, d) = nearest_centroid(p, &centroids);
            *a = i;
            wcss += d;
        }

        // Repair empty clusters by claiming the point currently farthest
        // from its own centroid (lowest index on ties).
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let (far_idx, far_d) = points
                .iter()
                .enumerate()
                .map(|(i, p)| (i, sq_dist(p, &centroids[assignments[i]])))
                .fold(
                    (0, -1.0),
                    |acc, (i, d)| if d > acc.1 { (i, d) } else { acc },
                );
            counts[assignments[far_idx]] -= 1;
            assignments[far_idx] = empty;
            counts[empty] = 1;
            centroids[empty] = points[far_idx];
            wcss -= far_d;
        }
        trace.push(wcss);

        let mut sums = vec![[0.0; 2]; k];
        for (&a, p) in assignments.iter().zip(points) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
        }
        let mut shift: f64 = 0.0;
        for i in 0..k {
            let next = [sums[i][0] / counts[i] as f64, sums[i][1] / counts[i] as f64];
            shift = shift.max(sq_dist(&centroids[i], &next).sqrt());
            centroids[i] = next;
        }
        if shift < KMEANS_SHIFT_TOL || iterations >= KMEANS_MAX_ITERS {
            // Final assignment against the settled centroids.
            wcss = 0.0;
            for (a, p) in assignments.iter_mut().zip(points) {
                let (i, d) = nearest_centroid(p, &centroids);
                *a = i;
                wcss += d;
            }
            trace.push(wcss);
            break;
        }
    }
    ClusteringResult {
        assignments,
        centroids,
        wcss,
        iterations,
        wcss_trace: trace,
    }
}

/// Lloyd's algorithm from a k-means++ seeding; iterates until the centroid
/// shift drops below 1e-6 or 300 iterations.
pub fn kmeans(points: &[[f64; 2]], k: usize, seed: u64) -> Result<ClusteringResult> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidInput(format!(
            "k must be in 1..={}, got {k}",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroids = kmeans_pp_init(points, k, &mut rng);
    Ok(lloyd(points, centroids))
}

/// Number of restarts used by [`kmeans_best_of`] callers in this crate.
pub const KMEANS_RESTARTS: u64 = 10;

/// Best (lowest WCSS) of `restarts` seeded k-means runs; earlier restart
/// wins ties.
pub fn kmeans_best_of(
    points: &[[f64; 2]],
    k: usize,
    seed: u64,
    restarts: u64,
) -> Result<ClusteringResult> {
    let mut best: Option<ClusteringResult> = None;
    for r in 0..restarts.max(1) {
        let run = kmeans(points, k, seed.wrapping_add(r))?;
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Fraction of points that land in their cluster's majority class:
/// `(1/N) * sum_k max_j |cluster_k intersect class_j|`.
pub fn purity(assignments: &[usize], labels: &[usize]) -> Result<f64> {
    contingency(assignments, labels).map(|(table, n, _, _)| {
        let hits: u64 = table
            .iter()
            .map(|row| row.iter().copied().max().unwrap_or(0))
            .sum();
        hits as f64 / n as f64
    })
}

/// Mutual information between clustering and classes, normalized by the
/// mean of their entropies (natural log). A fully degenerate pair (both
/// sides a single block) scores 1.
pub fn nmi(assignments: &[usize], labels: &[usize]) -> Result<f64> {
    let (table, n, k, j) = contingency(assignments, labels)?;
    let n_f = n as f64;
    let cluster_totals: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let mut class_totals = vec![0u64; j];
    for row in &table {
        for (t, &c) in class_totals.iter_mut().zip(row) {
            *t += c;
        }
    }
    let entropy = |totals: &[u64]| -> f64 {
        totals
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n_f;
                -p * p.ln()
            })
            .sum()
    };
    let h_clusters = entropy(&cluster_totals);
    let h_classes = entropy(&class_totals);
    if h_clusters + h_classes == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for ki in 0..k {
        for ji in 0..j {
            let c = table[ki][ji];
            if c == 0 {
                continue;
            }
            let p_joint = c as f64 / n_f;
            let p_k = cluster_totals[ki] as f64 / n_f;
            let p_j = class_totals[ji] as f64 / n_f;
            mi += p_joint * (p_joint / (p_k * p_j)).ln();
        }
    }
    Ok(mi / ((h_clusters + h_classes) / 2.0))
}

/// Joint count table `[cluster][class]`, plus N and both arities.
fn contingency(
    assignments: &[usize],
    labels: &[usize],
) -> Result<(Vec<Vec<u64>>, usize, usize, usize)> {
    if assignments.is_empty() || assignments.len() != labels.len() {
        return Err(Error::InvalidInput(
            "assignments and labels must be equal-length and non-empty".into(),
        ));
    }
    let k = assignments.iter().max().unwrap() + 1;
    let j = labels.iter().max().unwrap() + 1;
    let mut table = vec![vec![0u64; j]; k];
    for (&a, &l) in assignments.iter().zip(labels) {
        table[a][l] += 1;
    }
    Ok((table, assignments.len(), k, j))
}

/// WCSS per k over `k_range`, each the best of [`KMEANS_RESTARTS`] seeded
/// restarts plus a warm start that extends the previous k's best centroids
/// (which pins the curve non-increasing).
pub fn wcss_curve(
    points: &[[f64; 2]],
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    let mut curve = Vec::new();
    let mut previous: Option<ClusteringResult> = None;
    for k in k_range {
        let mut best = kmeans_best_of(points, k, seed, KMEANS_RESTARTS)?;
        if let Some(prev) = &previous {
            if prev.centroids.len() == k - 1 {
                // Split candidate: previous centroids plus the point farthest
                // from its centroid. Lloyd from there can only improve on the
                // previous WCSS.
                let far = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, sq_dist(p, &prev.centroids[prev.assignments[i]])))
                    .fold(
                        (0, -1.0),
                        |acc, (i, d)| if d > acc.1 { (i, d) } else { acc },
                    )
                    .0;
                let mut centroids = prev.centroids.clone();
                centroids.push(points[far]);
                let warm = lloyd(points, centroids);
                if warm.wcss < best.wcss {
                    best = warm;
                }
            }
        }
        curve.push((k, best.wcss));
        previous = Some(best);
    }
    Ok(curve)
}

/// One scatter-plot row: projected coordinates, assigned cluster, and the
/// ground-truth class of a labeled word.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScatterRow {
    pub word: String,
    pub x: f64,
    pub y: f64,
    pub cluster: usize,
    pub true_class: String,
}

#[derive(Debug, Clone)]
pub struct IntrinsicReport {
    pub purity: f64,
    pub nmi: f64,
    pub scatter: Vec<ScatterRow>,
}

/// Full intrinsic pipeline: pick the labeled words' embedding rows, project
/// to 2-D, k-means with k = class count (best of 10 restarts), then score
/// against the ground-truth classes.
pub fn evaluate_intrinsic(
    embeddings: &EmbeddingMatrix,
    labeled: &LabeledWordSet,
    seed: u64,
) -> Result<IntrinsicReport> {
    let words = labeled.labeled_words();
    let missing: Vec<String> = words
        .iter()
        .filter(|(w, _)| embeddings.word_index(w).is_none())
        .map(|(w, _)| w.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingWords(missing));
    }
    let points: Vec<Vec<f64>> = words
        .iter()
        .map(|(w, _)| embeddings.vector(w).expect("checked above").to_vec())
        .collect();
    let labels: Vec<usize> = words.iter().map(|&(_, c)| c).collect();

    let projected = pca_project(&points)?;
    let clustering = kmeans_best_of(&projected, labeled.class_count(), seed, KMEANS_RESTARTS)?;
    let purity = purity(&clustering.assignments, &labels)?;
    let nmi = nmi(&clustering.assignments, &labels)?;

    let class_names: Vec<&str> = labeled.classes().iter().map(|(n, _)| n.as_str()).collect();
    let scatter = words
        .iter()
        .zip(&projected)
        .zip(&clustering.assignments)
        .map(|(((word, class_id), p), &cluster)| ScatterRow {
            word: word.to_string(),
            x: p[0],
            y: p[1],
            cluster,
            true_class: class_names[*class_id].to_string(),
        })
        .collect();

    Ok(IntrinsicReport {
        purity,
        nmi,
        scatter,
    })
}
