//! Two-layer embedding model: ReLU hidden layer over a one-hot (or averaged
//! one-hot) input, full-softmax output over the vocabulary, Adam training in
//! skip-gram or CBOW mode, and extraction of the averaged embedding table.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    adam_step, cross_entropy, dense_backward, dense_forward, relu, relu_backward, softmax,
    softmax_ce_backward, AdamState, Tensor,
};
use crate::vocab::{encode_input, Mode, TrainingExample, Vocabulary};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct W2VConfig {
    pub mode: Mode,
    /// Hidden size N (the embedding dimension).
    pub dim: usize,
    /// Context radius: tokens taken on each side of the center word.
    pub window: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for W2VConfig {
    fn default() -> Self {
        W2VConfig {
            mode: Mode::Sg,
            dim: 100,
            window: 2,
            lr: 0.01,
            batch_size: 256,
            epochs: 5,
            seed: 0,
        }
    }
}

/// The model's two weight matrices and biases: `w1: [N, V]`, `w2: [V, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct W2VModel {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

impl W2VModel {
    pub fn dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn vocab_size(&self) -> usize {
        self.w1.cols()
    }
}

/// Initializes weights Uniform(-0.5/N, +0.5/N) from a seeded generator in a
/// fixed fill order (w1 row-major, then w2 row-major); biases start at zero.
pub fn init_model(dim: usize, vocab_size: usize, seed: u64) -> Result<W2VModel> {
    if vocab_size < 2 {
        return Err(Error::InvalidInput(format!(
            "vocabulary size must be >= 2, got {vocab_size}"
        )));
    }
    if dim < 1 {
        return Err(Error::InvalidInput(
            "embedding dimension must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 / dim as f64;
    let mut fill = |shape: &[usize]| {
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.gen_range(-half..half)).collect();
        Tensor::from_vec(shape, data).expect("shape matches data")
    };
    Ok(W2VModel {
        w1: fill(&[dim, vocab_size]),
        b1: Tensor::zeros(&[dim]),
        w2: fill(&[vocab_size, dim]),
        b2: Tensor::zeros(&[vocab_size]),
    })
}

/// `h = relu(w1 x + b1)`, `yhat = softmax(w2 h + b2)`.
pub fn forward(model: &W2VModel, x: &Tensor) -> Result<(Tensor, Tensor)> {
    let z1 = dense_forward(&model.w1, &model.b1, x)?;
    let h = relu(&z1);
    let z2 = dense_forward(&model.w2, &model.b2, &h)?;
    Ok((h, softmax(&z2)))
}

/// Parameter gradients in model shape order.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub dw1: Tensor,
    pub db1: Tensor,
    pub dw2: Tensor,
    pub db2: Tensor,
}

impl Gradients {
    fn zeros_like(model: &W2VModel) -> Self {
        Gradients {
            dw1: Tensor::zeros(model.w1.shape()),
            db1: Tensor::zeros(model.b1.shape()),
            dw2: Tensor::zeros(model.w2.shape()),
            db2: Tensor::zeros(model.b2.shape()),
        }
    }
}

/// Mean cross-entropy loss and mean gradients over a batch of examples.
pub fn batch_gradients(
    model: &W2VModel,
    batch: &[TrainingExample],
    vocab_size: usize,
) -> Result<(f64, Gradients)> {
    let mut grads = Gradients::zeros_like(model);
    let mut loss_sum = 0.0;
    for example in batch {
        let x = Tensor::from_vec(&[vocab_size], encode_input(example, vocab_size))?;
        let z1 = dense_forward(&model.w1, &model.b1, &x)?;
        let h = relu(&z1);
        let z2 = dense_forward(&model.w2, &model.b2, &h)?;
        let p = softmax(&z2);
        let mut y = Tensor::zeros(&[vocab_size]);
        y.data_mut()[example.target_index] = 1.0;
        loss_sum += cross_entropy(&p, &y);

        let dz2 = softmax_ce_backward(&p, &y);
        let (dw2, db2, dh) = dense_backward(&dz2, &model.w2, &h);
        let dz1 = relu_backward(&dh, &z1);
        let (dw1, db1, _) = dense_backward(&dz1, &model.w1, &x);
        grads.dw1.add_scaled(&dw1, 1.0);
        grads.db1.add_scaled(&db1, 1.0);
        grads.dw2.add_scaled(&dw2, 1.0);
        grads.db2.add_scaled(&db2, 1.0);
    }
    let inv = 1.0 / batch.len() as f64;
    grads.dw1.scale(inv);
    grads.db1.scale(inv);
    grads.dw2.scale(inv);
    grads.db2.scale(inv);
    Ok((loss_sum * inv, grads))
}

/// Trains in place over the example stream: per-epoch seeded reshuffle,
/// mini-batches of `batch_size` (final partial batch kept), one Adam step per
/// batch. Returns the mean batch loss per epoch.
pub fn train(
    model: &mut W2VModel,
    examples: &[TrainingExample],
    config: &W2VConfig,
) -> Result<Vec<f64>> {
    if examples.is_empty() {
        return Err(Error::InvalidInput("empty training example stream".into()));
    }
    let vocab_size = model.vocab_size();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt_w1 = AdamState::new(model.w1.shape(), config.lr);
    let mut opt_b1 = AdamState::new(model.b1.shape(), config.lr);
    let mut opt_w2 = AdamState::new(model.w2.shape(), config.lr);
    let mut opt_b2 = AdamState::new(model.b2.shape(), config.lr);

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size.max(1)) {
            let batch: Vec<TrainingExample> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let (loss, grads) = batch_gradients(model, &batch, vocab_size)?;
            adam_step(&mut model.w1, &grads.dw1, &mut opt_w1)?;
            adam_step(&mut model.b1, &grads.db1, &mut opt_b1)?;
            adam_step(&mut model.w2, &grads.dw2, &mut opt_w2)?;
            adam_step(&mut model.b2, &grads.db2, &mut opt_b2)?;
            epoch_loss += loss;
            batches += 1;
        }
        history.push(epoch_loss / batches as f64);
    }
    Ok(history)
}

/// The `V x N` embedding table: row i is the vector for vocabulary index i.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    matrix: Tensor,
    words: Vec<String>,
}

impl EmbeddingMatrix {
    pub fn new(matrix: Tensor, words: Vec<String>) -> Result<Self> {
        if matrix.shape().len() != 2 || matrix.rows() != words.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("[{}, N] matrix", words.len()),
                actual: format!("{:?}", matrix.shape()),
            });
        }
        Ok(EmbeddingMatrix { matrix, words })
    }

    pub fn vocab_size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn row(&self, index: usize) -> &[f64] {
        self.matrix.row(index)
    }

    pub fn word_index(&self, word: &str) -> Option<usize> {
        self.words.iter().position(|w| w == word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.word_index(word).map(|i| self.row(i))
    }
}

/// Binary checkpoint of the four parameter tensors.
pub fn save_model(model: &W2VModel, path: &Path) -> Result<()> {
    crate::nn::checkpoint::save_tensors(
        path,
        &[
            ("w1", &model.w1),
            ("b1", &model.b1),
            ("w2", &model.w2),
            ("b2", &model.b2),
        ],
    )
}

pub fn load_model(path: &Path) -> Result<W2VModel> {
    let tensors = crate::nn::checkpoint::load_tensors(path)?;
    let find = |name: &str| {
        tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| Error::format(path, format!("checkpoint missing tensor {name:?}")))
    };
    Ok(W2VModel {
        w1: find("w1")?,
        b1: find("b1")?,
        w2: find("w2")?,
        b2: find("b2")?,
    })
}

/// Averages the transposed first weight matrix with the second:
/// `E[i][j] = (w1[j][i] + w2[i][j]) / 2`.
pub fn extract_embeddings(model: &W2VModel, vocab: &Vocabulary) -> EmbeddingMatrix {
    let (n, v) = (model.dim(), model.vocab_size());
    let mut e = Tensor::zeros(&[v, n]);
    for i in 0..v {
        for j in 0..n {
            e.set2(i, j, (model.w1.at2(j, i) + model.w2.at2(i, j)) / 2.0);
        }
    }
    EmbeddingMatrix {
        matrix: e,
        words: vocab.words().to_vec(),
    }
}

/// Text format: header `V N`, then one `word v1 .. vN` line per row, values
/// printed with 17 significant digits so the round-trip is exact.
pub fn save_embeddings(embeddings: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{} {}", embeddings.vocab_size(), embeddings.dim())
        .map_err(|e| Error::io(path, e))?;
    for (i, word) in embeddings.words.iter().enumerate() {
        write!(w, "{word}").map_err(|e| Error::io(path, e))?;
        for v in embeddings.row(i) {
            write!(w, " {v:.16e}").map_err(|e| Error::io(path, e))?;
        }
        writeln!(w).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(path, "missing header line"))?
        .map_err(|e| Error::io(path, e))?;
    let mut parts = header.split_whitespace();
    let v: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format(path, "header must be `V N`"))?;
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format(path, "header must be `V N`"))?;

    let mut words = Vec::with_capacity(v);
    let mut data = Vec::with_capacity(v * n);
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if words.len() == v {
            return Err(Error::format(
                path,
                format!("expected {v} rows, found more"),
            ));
        }
        let mut fields = line.split_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| Error::format(path, format!("row {}: empty line", row + 1)))?;
        let values: Vec<f64> = fields
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(path, format!("row {}: {e}", row + 1)))?;
        if values.len() != n {
            return Err(Error::format(
                path,
                format!("row {}: expected {n} values, got {}", row + 1, values.len()),
            ));
        }
        words.push(word.to_string());
        data.extend(values);
    }
    if words.len() != v {
        return Err(Error::format(
            path,
            format!("expected {v} rows, got {}", words.len()),
        ));
    }
    EmbeddingMatrix::new(Tensor::from_vec(&[v, n], data)?, words)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// The `k` most cosine-similar words to `word` (self excluded), descending;
/// ties resolve to the lower vocabulary index. Zero-norm rows score 0.
pub fn nearest_neighbors(
    embeddings: &EmbeddingMatrix,
    word: &str,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    let query = embeddings
        .word_index(word)
        .ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    if k >= embeddings.vocab_size() {
        return Err(Error::InvalidInput(format!(
            "k must be < vocabulary size {}",
            embeddings.vocab_size()
        )));
    }
    let q = embeddings.row(query);
    let mut scored: Vec<(usize, f64)> = (0..embeddings.vocab_size())
        .filter(|&i| i != query)
        .map(|i| (i, cosine(q, embeddings.row(i))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(i, s)| (embeddings.words[i].clone(), s))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{central_diff_gradient, max_rel_error, DIFF_STEP};
    use crate::preprocess::CleanSentence;
    use crate::vocab::{build_vocab, generate_examples};

    fn toy_vocab(words: &[&str]) -> Vocabulary {
        let sentences = vec![CleanSentence::new(
            words.iter().map(|s| s.to_string()).collect(),
        )];
        build_vocab(&sentences, 1).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_model(3, 5, 99).unwrap();
        let b = init_model(3, 5, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.w1.shape(), &[3, 5]);
        assert_eq!(a.b1.shape(), &[3]);
        assert_eq!(a.w2.shape(), &[5, 3]);
        assert_eq!(a.b2.shape(), &[5]);
        let bound = 0.5 / 3.0;
        for v in a.w1.data().iter().chain(a.w2.data()) {
            assert!(v.abs() <= bound);
        }
        assert!(a.b1.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_rejects_tiny_vocab() {
        assert!(init_model(3, 1, 0).is_err());
    }

    #[test]
    fn zero_model_predicts_uniform() {
        let model = W2VModel {
            w1: Tensor::zeros(&[3, 5]),
            b1: Tensor::zeros(&[3]),
            w2: Tensor::zeros(&[5, 3]),
            b2: Tensor::zeros(&[5]),
        };
        let x = Tensor::from_vec(&[5], vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let (_, yhat) = forward(&model, &x).unwrap();
        for &p in yhat.data() {
            assert!((p - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn one_hot_selects_w1_column() {
        // Non-negative weights keep relu transparent.
        let data: Vec<f64> = (0..15).map(|i| i as f64 / 20.0).collect();
        let model = W2VModel {
            w1: Tensor::from_vec(&[3, 5], data).unwrap(),
            b1: Tensor::zeros(&[3]),
            w2: Tensor::zeros(&[5, 3]),
            b2: Tensor::zeros(&[5]),
        };
        let mut x = Tensor::zeros(&[5]);
        x.data_mut()[2] = 1.0;
        let (h, _) = forward(&model, &x).unwrap();
        let column: Vec<f64> = (0..3).map(|j| model.w1.at2(j, 2)).collect();
        assert_eq!(h.data(), column.as_slice());
    }

    #[test]
    #[allow(clippy::needless_range_loop)] // the longhand oracle is the point
    fn forward_matches_dense_recomputation() {
        let model = init_model(3, 5, 7).unwrap();
        let ex = TrainingExample {
            input_indices: vec![1, 3],
            target_index: 2,
        };
        let x = Tensor::from_vec(&[5], encode_input(&ex, 5)).unwrap();
        let (h, yhat) = forward(&model, &x).unwrap();

        // Independent dense recomputation, written out longhand.
        let mut z1 = [0.0f64; 3];
        for i in 0..3 {
            for j in 0..5 {
                z1[i] += model.w1.at2(i, j) * x.data()[j];
            }
            z1[i] += model.b1.data()[i];
        }
        let h2: Vec<f64> = z1.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        let mut z2 = [0.0f64; 5];
        for i in 0..5 {
            for j in 0..3 {
                z2[i] += model.w2.at2(i, j) * h2[j];
            }
            z2[i] += model.b2.data()[i];
        }
        let m = z2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = z2.iter().map(|&v| (v - m).exp()).collect();
        let s: f64 = exps.iter().sum();
        for i in 0..5 {
            assert!((yhat.data()[i] - exps[i] / s).abs() < 1e-12);
            if i < 3 {
                assert!((h.data()[i] - h2[i]).abs() < 1e-12);
            }
        }
        assert!((yhat.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forward_rejects_bad_dimension() {
        let model = init_model(3, 5, 0).unwrap();
        let x = Tensor::zeros(&[4]);
        assert!(forward(&model, &x).is_err());
    }

    fn flatten_model(model: &W2VModel) -> Vec<f64> {
        let mut p = model.w1.data().to_vec();
        p.extend_from_slice(model.b1.data());
        p.extend_from_slice(model.w2.data());
        p.extend_from_slice(model.b2.data());
        p
    }

    fn unflatten_model(p: &[f64], dim: usize, v: usize) -> W2VModel {
        let (a, b, c) = (dim * v, dim * v + dim, dim * v + dim + v * dim);
        W2VModel {
            w1: Tensor::from_vec(&[dim, v], p[..a].to_vec()).unwrap(),
            b1: Tensor::from_vec(&[dim], p[a..b].to_vec()).unwrap(),
            w2: Tensor::from_vec(&[v, dim], p[b..c].to_vec()).unwrap(),
            b2: Tensor::from_vec(&[v], p[c..].to_vec()).unwrap(),
        }
    }

    #[test]
    fn batch_gradients_match_finite_differences() {
        for mode in [Mode::Sg, Mode::Cbow] {
            let sentences = vec![CleanSentence::new(
                ["a", "b", "c", "d", "e"].map(String::from).to_vec(),
            )];
            let vocab = build_vocab(&sentences, 1).unwrap();
            let batch: Vec<_> = generate_examples(&sentences, &vocab, 2, mode).collect();
            let model = init_model(3, 5, 13).unwrap();
            let (_, grads) = batch_gradients(&model, &batch, 5).unwrap();

            let params = flatten_model(&model);
            let f = |p: &[f64]| {
                let m = unflatten_model(p, 3, 5);
                batch_gradients(&m, &batch, 5).unwrap().0
            };
            let numeric = central_diff_gradient(&f, &params, DIFF_STEP);
            let mut analytic = grads.dw1.data().to_vec();
            analytic.extend_from_slice(grads.db1.data());
            analytic.extend_from_slice(grads.dw2.data());
            analytic.extend_from_slice(grads.db2.data());
            let err = max_rel_error(&numeric, &analytic);
            assert!(err < 1e-5, "{mode} rel err {err}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let sentences = vec![
            CleanSentence::new(["a", "b", "c"].map(String::from).to_vec()),
            CleanSentence::new(["d", "e", "f"].map(String::from).to_vec()),
        ];
        let vocab = build_vocab(&sentences, 1).unwrap();
        let examples: Vec<_> = generate_examples(&sentences, &vocab, 2, Mode::Sg).collect();
        let cfg = W2VConfig {
            dim: 4,
            epochs: 1,
            seed: 3,
            batch_size: 4,
            ..W2VConfig::default()
        };
        let run = || {
            let mut model = init_model(cfg.dim, vocab.size(), cfg.seed).unwrap();
            let history = train(&mut model, &examples, &cfg).unwrap();
            (model, history)
        };
        let (m1, h1) = run();
        let (m2, h2) = run();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn training_reduces_loss_on_learnable_toy() {
        // Six words, two repeating sentences: plenty of signal in 30 epochs.
        let sentences = vec![
            CleanSentence::new(["a", "b", "c", "a", "b"].map(String::from).to_vec()),
            CleanSentence::new(["d", "e", "f", "d", "e"].map(String::from).to_vec()),
            CleanSentence::new(["a", "b", "c"].map(String::from).to_vec()),
            CleanSentence::new(["d", "e", "f"].map(String::from).to_vec()),
        ];
        let vocab = build_vocab(&sentences, 1).unwrap();
        let examples: Vec<_> = generate_examples(&sentences, &vocab, 2, Mode::Sg).collect();
        assert!(examples.len() >= 50 - 12); // sanity on corpus size
        let cfg = W2VConfig {
            dim: 8,
            epochs: 30,
            seed: 5,
            batch_size: 16,
            ..W2VConfig::default()
        };
        let mut model = init_model(cfg.dim, vocab.size(), cfg.seed).unwrap();
        let history = train(&mut model, &examples, &cfg).unwrap();
        assert!(history.last().unwrap() < history.first().unwrap());
    }

    #[test]
    fn empty_stream_errors() {
        let mut model = init_model(3, 5, 0).unwrap();
        assert!(train(&mut model, &[], &W2VConfig::default()).is_err());
    }

    #[test]
    fn extraction_averages_the_matrices() {
        let vocab = toy_vocab(&["a", "b"]);
        // w1 = w2^T: averaging is a fixed point.
        let w2 = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut w1 = Tensor::zeros(&[3, 2]);
        for i in 0..2 {
            for j in 0..3 {
                w1.set2(j, i, w2.at2(i, j));
            }
        }
        let model = W2VModel {
            w1: w1.clone(),
            b1: Tensor::zeros(&[3]),
            w2: w2.clone(),
            b2: Tensor::zeros(&[2]),
        };
        let e = extract_embeddings(&model, &vocab);
        for i in 0..2 {
            assert_eq!(e.row(i), w2.row(i));
        }

        // w1 = 0: e is w2 / 2.
        let model_zero = W2VModel {
            w1: Tensor::zeros(&[3, 2]),
            b1: Tensor::zeros(&[3]),
            w2: w2.clone(),
            b2: Tensor::zeros(&[2]),
        };
        let e0 = extract_embeddings(&model_zero, &vocab);
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(e0.row(i)[j], w2.at2(i, j) / 2.0);
            }
        }
    }

    #[test]
    fn extraction_matches_elementwise_average() {
        let vocab = toy_vocab(&["a", "b", "c"]);
        let model = init_model(2, 3, 42).unwrap();
        let e = extract_embeddings(&model, &vocab);
        for i in 0..3 {
            for j in 0..2 {
                let expected = (model.w1.at2(j, i) + model.w2.at2(i, j)) / 2.0;
                assert_eq!(e.row(i)[j], expected);
            }
        }
    }

    #[test]
    fn model_checkpoint_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = init_model(3, 5, 12).unwrap();
        save_model(&model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
    }

    #[test]
    fn save_load_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        let vocab = toy_vocab(&["alpha", "beta", "gamma"]);
        let model = init_model(4, 3, 17).unwrap();
        let e = extract_embeddings(&model, &vocab);
        save_embeddings(&e, &path).unwrap();
        let loaded = load_embeddings(&path).unwrap();
        assert_eq!(loaded, e);
    }

    #[test]
    fn truncated_embedding_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        std::fs::write(&path, "3 2\na 1.0 2.0\nb 3.0 4.0\n").unwrap();
        let err = load_embeddings(&path).unwrap_err().to_string();
        assert!(err.contains("expected 3 rows, got 2"), "{err}");
    }

    #[test]
    fn row_width_mismatch_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        std::fs::write(&path, "1 3\na 1.0 2.0\n").unwrap();
        let err = load_embeddings(&path).unwrap_err().to_string();
        assert!(err.contains("expected 3 values, got 2"), "{err}");
    }

    #[test]
    fn neighbors_rank_by_cosine() {
        let matrix = Tensor::from_vec(
            &[4, 2],
            vec![
                1.0, 0.0, // a
                1.0, 0.0, // b: duplicate of a
                0.0, 1.0, // c: orthogonal
                -1.0, 0.0, // d: opposite
            ],
        )
        .unwrap();
        let e =
            EmbeddingMatrix::new(matrix, ["a", "b", "c", "d"].map(String::from).to_vec()).unwrap();
        let got = nearest_neighbors(&e, "a", 3).unwrap();
        assert_eq!(got[0].0, "b");
        assert!((got[0].1 - 1.0).abs() < 1e-15);
        assert_eq!(got[1].0, "c");
        assert!(got[1].1.abs() < 1e-15);
        assert_eq!(got[2].0, "d");
        assert!((got[2].1 + 1.0).abs() < 1e-15);
    }

    #[test]
    fn neighbors_brute_force_fixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let matrix = Tensor::from_vec(&[4, 2], data).unwrap();
        let words: Vec<String> = ["w0", "w1", "w2", "w3"].map(String::from).to_vec();
        let e = EmbeddingMatrix::new(matrix.clone(), words).unwrap();
        let got = nearest_neighbors(&e, "w1", 3).unwrap();

        let mut expected: Vec<(usize, f64)> = (0..4)
            .filter(|&i| i != 1)
            .map(|i| (i, cosine(matrix.row(1), matrix.row(i))))
            .collect();
        expected.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (g, (i, s)) in got.iter().zip(expected) {
            assert_eq!(g.0, format!("w{i}"));
            assert_eq!(g.1, s);
        }
    }

    #[test]
    fn neighbors_unknown_word_errors() {
        let e = EmbeddingMatrix::new(
            Tensor::zeros(&[2, 2]),
            ["a", "b"].map(String::from).to_vec(),
        )
        .unwrap();
        assert!(matches!(
            nearest_neighbors(&e, "zzz", 1),
            Err(Error::UnknownWord(_))
        ));
        assert!(nearest_neighbors(&e, "a", 2).is_err());
    }

    #[test]
    fn forward_always_emits_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let model = init_model(4, 6, rng.gen()).unwrap();
            let idx = rng.gen_range(0..6);
            let ex = TrainingExample {
                input_indices: vec![idx],
                target_index: 0,
            };
            let x = Tensor::from_vec(&[6], encode_input(&ex, 6)).unwrap();
            let (_, yhat) = forward(&model, &x).unwrap();
            assert!((yhat.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(yhat.data().iter().all(|&p| p >= 0.0));
        }
    }
}
