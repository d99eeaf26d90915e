//! Downstream benchmark: a 1-D CNN news-article classifier over a frozen
//! pretrained embedding table, scored with macro precision/recall/F1 and a
//! confusion matrix.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::nn::{
    adam_step, conv1d_backward, conv1d_forward, cross_entropy, dense_backward, dense_forward,
    dropout, dropout_backward, global_max_pool, global_max_pool_backward, relu, relu_backward,
    softmax, softmax_ce_backward, AdamState, DropoutMode, Tensor,
};
use crate::preprocess::{preprocess_text, PreprocessConfig};
use crate::vocab::Vocabulary;
use crate::word2vec::EmbeddingMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Articles are truncated or zero-padded to this many tokens.
    pub seq_len: usize,
    pub filters: usize,
    pub kernel: usize,
    pub dropout_rate: f64,
    pub dense_units: usize,
    pub classes: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            seq_len: 400,
            filters: 128,
            kernel: 3,
            dropout_rate: 0.8,
            dense_units: 64,
            classes: 5,
            lr: 0.01,
            batch_size: 256,
            epochs: 10,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seq_len == 0
            || self.filters == 0
            || self.kernel == 0
            || self.dense_units == 0
            || self.classes == 0
            || self.batch_size == 0
        {
            return Err(Error::InvalidInput(
                "classifier config fields must be positive".into(),
            ));
        }
        if self.seq_len < self.kernel {
            return Err(Error::InvalidInput(format!(
                "seq_len {} shorter than kernel {}",
                self.seq_len, self.kernel
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidInput("dropout rate must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// `(padded index sequence, class id)`. Index 0 is the pad token.
pub type Sample = (Vec<usize>, usize);

#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
    /// Articles that had no usable tokens after preprocessing.
    pub dropped: usize,
}

/// Maps articles to padded index sequences and splits them 10% test, then
/// 90/10 train/val of the remainder, after one seeded shuffle. Vocabulary
/// indices shift by +1 so 0 can pad; out-of-vocabulary tokens are dropped;
/// long articles keep their head.
pub fn prepare_dataset(
    corpus: &Corpus,
    pre: &PreprocessConfig,
    vocab: &Vocabulary,
    label_map: &HashMap<String, usize>,
    config: &ClassifierConfig,
    seed: u64,
) -> Result<SplitDataset> {
    config.validate()?;
    if label_map.len() != config.classes {
        return Err(Error::InvalidInput(format!(
            "label map has {} categories but config declares {} classes",
            label_map.len(),
            config.classes
        )));
    }
    if let Some((cat, &id)) = label_map.iter().find(|(_, &id)| id >= config.classes) {
        return Err(Error::InvalidInput(format!(
            "label map assigns class id {id} to {cat:?}, outside 0..{}",
            config.classes
        )));
    }

    let mut samples = Vec::with_capacity(corpus.len());
    let mut dropped = 0usize;
    for article in &corpus.articles {
        let class = *label_map.get(&article.category).ok_or_else(|| {
            Error::InvalidInput(format!(
                "article {:?} has unknown label {:?}",
                article.id, article.category
            ))
        })?;
        let mut indices: Vec<usize> = preprocess_text(&article.text, pre)
            .iter()
            .flat_map(|s| s.tokens.iter())
            .filter_map(|t| vocab.index(t).map(|i| i + 1))
            .take(config.seq_len)
            .collect();
        if indices.is_empty() {
            dropped += 1;
            continue;
        }
        indices.resize(config.seq_len, 0);
        samples.push((indices, class));
    }
    if samples.is_empty() {
        return Err(Error::InvalidInput(
            "no articles survived preprocessing".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples.shuffle(&mut rng);
    let n = samples.len();
    let n_test = n / 10;
    let n_val = (n - n_test) / 10;
    let test = samples.split_off(n - n_test);
    let val = samples.split_off(n - n_test - n_val);
    Ok(SplitDataset {
        train: samples,
        val,
        test,
        dropped,
    })
}

/// CNN classifier: frozen embedding lookup, conv1d + ReLU, global max pool,
/// dropout, dense + ReLU, dense + softmax.
#[derive(Debug, Clone)]
pub struct ClassifierModel {
    /// `[V+1, N]`; row 0 is the all-zero pad row. Never updated.
    embedding: Tensor,
    pub conv_kernels: Tensor,
    pub conv_bias: Tensor,
    pub dense1_w: Tensor,
    pub dense1_b: Tensor,
    pub dense2_w: Tensor,
    pub dense2_b: Tensor,
    config: ClassifierConfig,
}

fn glorot(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor::from_vec(shape, data).expect("shape matches data")
}

/// Builds the classifier around a frozen embedding table. Trainable weights
/// are Glorot-uniform from the seed; biases start at zero.
pub fn build_classifier(
    embeddings: &EmbeddingMatrix,
    config: &ClassifierConfig,
    seed: u64,
) -> Result<ClassifierModel> {
    config.validate()?;
    let (v, n) = (embeddings.vocab_size(), embeddings.dim());
    let mut table = Tensor::zeros(&[v + 1, n]);
    for i in 0..v {
        table.row_mut(i + 1).copy_from_slice(embeddings.row(i));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (f, k, u, c) = (
        config.filters,
        config.kernel,
        config.dense_units,
        config.classes,
    );
    Ok(ClassifierModel {
        embedding: table,
        conv_kernels: glorot(&[f, k, n], k * n, k * f, &mut rng),
        conv_bias: Tensor::zeros(&[f]),
        dense1_w: glorot(&[u, f], f, u, &mut rng),
        dense1_b: Tensor::zeros(&[u]),
        dense2_w: glorot(&[c, u], u, c, &mut rng),
        dense2_b: Tensor::zeros(&[c]),
        config: config.clone(),
    })
}

impl ClassifierModel {
    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn embedding_table(&self) -> &Tensor {
        &self.embedding
    }

    fn lookup(&self, sequence: &[usize]) -> Result<Tensor> {
        if sequence.len() != self.config.seq_len {
            return Err(Error::ShapeMismatch {
                expected: format!("sequence of length {}", self.config.seq_len),
                actual: format!("{}", sequence.len()),
            });
        }
        let n = self.embedding.cols();
        let mut x = Tensor::zeros(&[sequence.len(), n]);
        for (t, &idx) in sequence.iter().enumerate() {
            if idx >= self.embedding.rows() {
                return Err(Error::InvalidInput(format!(
                    "token index {idx} outside embedding table of {} rows",
                    self.embedding.rows()
                )));
            }
            x.row_mut(t).copy_from_slice(self.embedding.row(idx));
        }
        Ok(x)
    }

    /// Class probabilities with dropout disabled.
    pub fn predict_proba(&self, sequence: &[usize]) -> Result<Tensor> {
        Ok(self.forward(sequence, None)?.probabilities)
    }

    /// Argmax class (lowest index wins ties).
    pub fn predict(&self, sequence: &[usize]) -> Result<usize> {
        let p = self.predict_proba(sequence)?;
        Ok(p.data()
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &v)| {
                    if v > acc.1 {
                        (i, v)
                    } else {
                        acc
                    }
                },
            )
            .0)
    }

    fn forward(&self, sequence: &[usize], mask: Option<&Tensor>) -> Result<ForwardPass> {
        let x = self.lookup(sequence)?;
        let conv_pre = conv1d_forward(&x, &self.conv_kernels, &self.conv_bias)?;
        let conv_act = relu(&conv_pre);
        let (pooled, argmax) = global_max_pool(&conv_act);
        let dropped = match mask {
            Some(m) => {
                let data = pooled
                    .data()
                    .iter()
                    .zip(m.data())
                    .map(|(&v, &s)| v * s)
                    .collect();
                Tensor::from_vec(pooled.shape(), data).expect("same shape")
            }
            None => pooled.clone(),
        };
        let z1 = dense_forward(&self.dense1_w, &self.dense1_b, &dropped)?;
        let a1 = relu(&z1);
        let z2 = dense_forward(&self.dense2_w, &self.dense2_b, &a1)?;
        let probabilities = softmax(&z2);
        Ok(ForwardPass {
            x,
            conv_pre,
            argmax,
            dropped,
            z1,
            a1,
            probabilities,
        })
    }
}

struct ForwardPass {
    x: Tensor,
    conv_pre: Tensor,
    argmax: Vec<usize>,
    dropped: Tensor,
    z1: Tensor,
    a1: Tensor,
    probabilities: Tensor,
}

/// Gradients for every trainable tensor (the embedding table is frozen and
/// has none).
#[derive(Debug, Clone)]
pub struct ClassifierGradients {
    pub conv_kernels: Tensor,
    pub conv_bias: Tensor,
    pub dense1_w: Tensor,
    pub dense1_b: Tensor,
    pub dense2_w: Tensor,
    pub dense2_b: Tensor,
}

impl ClassifierGradients {
    fn zeros_like(model: &ClassifierModel) -> Self {
        ClassifierGradients {
            conv_kernels: Tensor::zeros(model.conv_kernels.shape()),
            conv_bias: Tensor::zeros(model.conv_bias.shape()),
            dense1_w: Tensor::zeros(model.dense1_w.shape()),
            dense1_b: Tensor::zeros(model.dense1_b.shape()),
            dense2_w: Tensor::zeros(model.dense2_w.shape()),
            dense2_b: Tensor::zeros(model.dense2_b.shape()),
        }
    }

    fn scale(&mut self, factor: f64) {
        self.conv_kernels.scale(factor);
        self.conv_bias.scale(factor);
        self.dense1_w.scale(factor);
        self.dense1_b.scale(factor);
        self.dense2_w.scale(factor);
        self.dense2_b.scale(factor);
    }
}

/// Mean loss and mean trainable-parameter gradients over a batch. `masks`
/// supplies one dropout mask per example (None runs dropout-free).
pub fn classifier_batch_gradients(
    model: &ClassifierModel,
    batch: &[Sample],
    masks: Option<&[Tensor]>,
) -> Result<(f64, ClassifierGradients)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    if let Some(m) = masks {
        if m.len() != batch.len() {
            return Err(Error::InvalidInput("one dropout mask per example".into()));
        }
    }
    let classes = model.config.classes;
    let mut grads = ClassifierGradients::zeros_like(model);
    let mut loss_sum = 0.0;
    for (i, (sequence, class)) in batch.iter().enumerate() {
        if *class >= classes {
            return Err(Error::InvalidInput(format!(
                "class id {class} outside 0..{classes}"
            )));
        }
        let mask = masks.map(|m| &m[i]);
        let pass = model.forward(sequence, mask)?;
        let mut y = Tensor::zeros(&[classes]);
        y.data_mut()[*class] = 1.0;
        loss_sum += cross_entropy(&pass.probabilities, &y);

        let dz2 = softmax_ce_backward(&pass.probabilities, &y);
        let (dw2, db2, da1) = dense_backward(&dz2, &model.dense2_w, &pass.a1);
        let dz1 = relu_backward(&da1, &pass.z1);
        let (dw1, db1, ddropped) = dense_backward(&dz1, &model.dense1_w, &pass.dropped);
        let dpooled = match mask {
            Some(m) => dropout_backward(&ddropped, m),
            None => ddropped,
        };
        let dconv_act = global_max_pool_backward(&dpooled, &pass.argmax, pass.conv_pre.rows());
        let dconv_pre = relu_backward(&dconv_act, &pass.conv_pre);
        let (_dx, dker, dbias) = conv1d_backward(&dconv_pre, &pass.x, &model.conv_kernels);

        grads.conv_kernels.add_scaled(&dker, 1.0);
        grads.conv_bias.add_scaled(&dbias, 1.0);
        grads.dense1_w.add_scaled(&dw1, 1.0);
        grads.dense1_b.add_scaled(&db1, 1.0);
        grads.dense2_w.add_scaled(&dw2, 1.0);
        grads.dense2_b.add_scaled(&db2, 1.0);
    }
    let inv = 1.0 / batch.len() as f64;
    grads.scale(inv);
    Ok((loss_sum * inv, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochAccuracy {
    pub epoch: usize,
    pub train_acc: f64,
    pub val_acc: f64,
}

fn accuracy(model: &ClassifierModel, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (sequence, class) in samples {
        if model.predict(sequence)? == *class {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

/// Trains the classifier with Adam; dropout is active only while training.
/// Returns per-epoch train/val accuracy measured with dropout disabled.
pub fn train_classifier(
    model: &mut ClassifierModel,
    data: &SplitDataset,
    config: &ClassifierConfig,
) -> Result<Vec<EpochAccuracy>> {
    if data.train.is_empty() {
        return Err(Error::InvalidInput("empty training split".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt_ker = AdamState::new(model.conv_kernels.shape(), config.lr);
    let mut opt_cb = AdamState::new(model.conv_bias.shape(), config.lr);
    let mut opt_w1 = AdamState::new(model.dense1_w.shape(), config.lr);
    let mut opt_b1 = AdamState::new(model.dense1_b.shape(), config.lr);
    let mut opt_w2 = AdamState::new(model.dense2_w.shape(), config.lr);
    let mut opt_b2 = AdamState::new(model.dense2_b.shape(), config.lr);

    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut curves = Vec::with_capacity(config.epochs);
    let ones = Tensor::filled(&[config.filters], 1.0);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Sample> = chunk.iter().map(|&i| data.train[i].clone()).collect();
            let masks: Vec<Tensor> = batch
                .iter()
                .map(|_| {
                    dropout(&ones, config.dropout_rate, DropoutMode::Train, &mut rng)
                        .map(|(_, mask)| mask)
                })
                .collect::<Result<_>>()?;
            let (_, grads) = classifier_batch_gradients(model, &batch, Some(&masks))?;
            adam_step(&mut model.conv_kernels, &grads.conv_kernels, &mut opt_ker)?;
            adam_step(&mut model.conv_bias, &grads.conv_bias, &mut opt_cb)?;
            adam_step(&mut model.dense1_w, &grads.dense1_w, &mut opt_w1)?;
            adam_step(&mut model.dense1_b, &grads.dense1_b, &mut opt_b1)?;
            adam_step(&mut model.dense2_w, &grads.dense2_w, &mut opt_w2)?;
            adam_step(&mut model.dense2_b, &grads.dense2_b, &mut opt_b2)?;
        }
        curves.push(EpochAccuracy {
            epoch: epoch + 1,
            train_acc: accuracy(model, &data.train)?,
            val_acc: accuracy(model, &data.val)?,
        });
    }
    Ok(curves)
}

/// Row-is-truth confusion counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }
}

/// Harmonic mean of precision and recall: `2PR / (P + R)`.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub confusion: ConfusionMatrix,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class_precision: Vec<f64>,
    pub per_class_recall: Vec<f64>,
    /// Classes never predicted (their precision is defined as 0).
    pub degenerate_classes: Vec<usize>,
}

/// Evaluates with dropout disabled: argmax predictions, per-class precision
/// and recall macro-averaged, F1 taken over the macro P and R.
pub fn evaluate_classifier(model: &ClassifierModel, test: &[Sample]) -> Result<EvalOutcome> {
    if test.is_empty() {
        return Err(Error::InvalidInput("empty test split".into()));
    }
    let classes = model.config.classes;
    let mut counts = vec![vec![0u64; classes]; classes];
    for (sequence, class) in test {
        let predicted = model.predict(sequence)?;
        counts[*class][predicted] += 1;
    }
    let confusion = ConfusionMatrix { counts };

    let mut per_class_precision = Vec::with_capacity(classes);
    let mut per_class_recall = Vec::with_capacity(classes);
    let mut degenerate = Vec::new();
    for c in 0..classes {
        let predicted: u64 = (0..classes).map(|t| confusion.counts[t][c]).sum();
        let actual: u64 = confusion.counts[c].iter().sum();
        let hit = confusion.counts[c][c];
        if predicted == 0 {
            degenerate.push(c);
            per_class_precision.push(0.0);
        } else {
            per_class_precision.push(hit as f64 / predicted as f64);
        }
        per_class_recall.push(if actual == 0 {
            0.0
        } else {
            hit as f64 / actual as f64
        });
    }
    let precision = per_class_precision.iter().sum::<f64>() / classes as f64;
    let recall = per_class_recall.iter().sum::<f64>() / classes as f64;
    Ok(EvalOutcome {
        confusion,
        f1: f1_score(precision, recall),
        precision,
        recall,
        per_class_precision,
        per_class_recall,
        degenerate_classes: degenerate,
    })
}
