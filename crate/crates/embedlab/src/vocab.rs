//! Vocabulary construction and windowed training-example generation.
//!
//! An input is a one-hot vector for a single word index, or the mean of the
//! one-hot vectors of a context window; both are carried around as index
//! lists and densified by [`encode_input`].

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::CleanSentence;

/// Word/index bijection with per-index frequencies; indices are assigned by
/// descending frequency, ties broken lexicographically.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    word_to_index: HashMap<String, usize>,
    index_to_word: Vec<String>,
    frequency: Vec<u64>,
}

impl Vocabulary {
    pub fn size(&self) -> usize {
        self.index_to_word.len()
    }

    pub fn index(&self, word: &str) -> Option<usize> {
        self.word_to_index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.index_to_word[index]
    }

    pub fn frequency(&self, index: usize) -> u64 {
        self.frequency[index]
    }

    pub fn words(&self) -> &[String] {
        &self.index_to_word
    }

    /// Builds a vocabulary from an existing word order (frequencies unknown,
    /// recorded as 0), e.g. the rows of a loaded embedding file.
    pub fn from_words(words: &[String]) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::InvalidInput("empty word list".into()));
        }
        let mut word_to_index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if word_to_index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate word {w:?}")));
            }
        }
        Ok(Vocabulary {
            word_to_index,
            index_to_word: words.to_vec(),
            frequency: vec![0; words.len()],
        })
    }

    /// Writes `word<TAB>frequency`, one line per index.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (word, freq) in self.index_to_word.iter().zip(&self.frequency) {
            writeln!(w, "{word}\t{freq}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut index_to_word = Vec::new();
        let mut frequency = Vec::new();
        let mut word_to_index = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let (word, freq) = line.split_once('\t').ok_or_else(|| Error::MalformedLine {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected word<TAB>frequency".into(),
            })?;
            let freq: u64 = freq.parse().map_err(|e| Error::MalformedLine {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("bad frequency: {e}"),
            })?;
            word_to_index.insert(word.to_string(), i);
            index_to_word.push(word.to_string());
            frequency.push(freq);
        }
        if index_to_word.is_empty() {
            return Err(Error::InvalidInput("empty vocabulary file".into()));
        }
        Ok(Vocabulary {
            word_to_index,
            index_to_word,
            frequency,
        })
    }
}

/// Builds the vocabulary over all sentence tokens, excluding words seen
/// fewer than `min_count` times.
pub fn build_vocab(sentences: &[CleanSentence], min_count: u64) -> Result<Vocabulary> {
    if min_count < 1 {
        return Err(Error::InvalidInput("min_count must be >= 1".into()));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for sentence in sentences {
        for token in &sentence.tokens {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .collect();
    if entries.is_empty() {
        return Err(Error::InvalidInput(
            "no words meet min_count; vocabulary is empty".into(),
        ));
    }
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut word_to_index = HashMap::with_capacity(entries.len());
    let mut index_to_word = Vec::with_capacity(entries.len());
    let mut frequency = Vec::with_capacity(entries.len());
    for (i, (word, count)) in entries.into_iter().enumerate() {
        word_to_index.insert(word.to_string(), i);
        index_to_word.push(word.to_string());
        frequency.push(count);
    }
    Ok(Vocabulary {
        word_to_index,
        index_to_word,
        frequency,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sg,
    Cbow,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Sg => write!(f, "SG"),
            Mode::Cbow => write!(f, "CBOW"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sg" | "skip-gram" | "skipgram" => Ok(Mode::Sg),
            "cbow" => Ok(Mode::Cbow),
            other => Err(Error::InvalidInput(format!("unknown mode {other:?}"))),
        }
    }
}

/// One training pair: a singleton input index (skip-gram) or the context
/// index list (CBOW), and the word index to predict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub input_indices: Vec<usize>,
    pub target_index: usize,
}

/// Emits windowed training examples in deterministic order: sentence order,
/// then center position, then left-to-right context. Out-of-vocabulary
/// tokens are dropped before windowing; a context extends up to `window`
/// tokens on each side, truncated at sentence boundaries.
pub fn generate_examples<'a>(
    sentences: &'a [CleanSentence],
    vocab: &'a Vocabulary,
    window: usize,
    mode: Mode,
) -> impl Iterator<Item = TrainingExample> + 'a {
    assert!(window >= 1, "window must be >= 1");
    sentences.iter().flat_map(move |sentence| {
        let ids: Vec<usize> = sentence
            .tokens
            .iter()
            .filter_map(|t| vocab.index(t))
            .collect();
        let n = ids.len();
        (0..n).flat_map(move |t| {
            let lo = t.saturating_sub(window);
            let hi = (t + window).min(n.saturating_sub(1));
            let context: Vec<usize> = (lo..=hi).filter(|&c| c != t).map(|c| ids[c]).collect();
            let center = ids.get(t).copied();
            let mut out = Vec::new();
            if let Some(center) = center {
                match mode {
                    Mode::Sg => {
                        for &ctx in &context {
                            out.push(TrainingExample {
                                input_indices: vec![center],
                                target_index: ctx,
                            });
                        }
                    }
                    Mode::Cbow => {
                        if !context.is_empty() {
                            out.push(TrainingExample {
                                input_indices: context,
                                target_index: center,
                            });
                        }
                    }
                }
            }
            out.into_iter()
        })
    })
}

/// Densifies an example input: the one-hot vector of a singleton index, or
/// the mean of the context's one-hot vectors (repeats counted with
/// multiplicity). The result is non-negative and sums to exactly 1.
pub fn encode_input(example: &TrainingExample, vocab_size: usize) -> Vec<f64> {
    let mut x = vec![0.0; vocab_size];
    let total = example.input_indices.len() as f64;
    for &idx in &example.input_indices {
        x[idx] += 1.0;
    }
    for v in &mut x {
        *v /= total;
    }
    // Division can leave the mass a few ulps off 1. Rewriting the last
    // nonzero entry as 1 - prefix makes the left-to-right total land on
    // exactly 1.0 (prefix + (1 - prefix) rounds to 1 for prefix in (0, 1)).
    let sum: f64 = x.iter().sum();
    if sum != 1.0 {
        let last = x.iter().rposition(|&v| v != 0.0).expect("non-empty input");
        let prefix: f64 = x[..last].iter().sum();
        x[last] = 1.0 - prefix;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sent(tokens: &[&str]) -> CleanSentence {
        CleanSentence::new(tokens.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn vocab_orders_by_frequency_then_lexicographic() {
        let sentences = vec![sent(&["a", "b", "a"])];
        let vocab = build_vocab(&sentences, 1).unwrap();
        assert_eq!(vocab.size(), 2);
        assert_eq!(vocab.index("a"), Some(0));
        assert_eq!(vocab.index("b"), Some(1));
        assert_eq!(vocab.frequency(0), 2);
    }

    #[test]
    fn min_count_filters_rare_words() {
        let sentences = vec![sent(&["a", "b", "a"])];
        let vocab = build_vocab(&sentences, 2).unwrap();
        assert_eq!(vocab.size(), 1);
        assert_eq!(vocab.word(0), "a");
    }

    #[test]
    fn repeated_word_counts() {
        let sentences = vec![sent(&["w", "w", "w", "w"])];
        let vocab = build_vocab(&sentences, 1).unwrap();
        assert_eq!(vocab.size(), 1);
        assert_eq!(vocab.frequency(0), 4);
    }

    #[test]
    fn empty_input_errors() {
        assert!(build_vocab(&[], 1).is_err());
        assert!(build_vocab(&[sent(&["a"])], 0).is_err());
        assert!(build_vocab(&[sent(&["a"])], 5).is_err());
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let sentences = vec![sent(&["zz", "aa"])];
        let vocab = build_vocab(&sentences, 1).unwrap();
        assert_eq!(vocab.index("aa"), Some(0));
        assert_eq!(vocab.index("zz"), Some(1));
    }

    #[test]
    fn vocab_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.tsv");
        let vocab = build_vocab(&[sent(&["a", "b", "a", "c"])], 1).unwrap();
        vocab.save(&path).unwrap();
        let loaded = Vocabulary::load(&path).unwrap();
        assert_eq!(loaded.size(), vocab.size());
        for i in 0..vocab.size() {
            assert_eq!(loaded.word(i), vocab.word(i));
            assert_eq!(loaded.frequency(i), vocab.frequency(i));
        }
    }

    /// Brute-force oracle: all (center, context) position pairs within the
    /// window, in emission order.
    fn enumerate_pairs(len: usize, window: usize) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for t in 0..len {
            for c in t.saturating_sub(window)..=(t + window).min(len - 1) {
                if c != t {
                    pairs.push((t, c));
                }
            }
        }
        pairs
    }

    #[test]
    fn sg_pairs_match_enumeration() {
        let sentences = vec![sent(&["a", "b", "c"])];
        let vocab = build_vocab(&sentences, 1).unwrap();
        let got: Vec<_> = generate_examples(&sentences, &vocab, 2, Mode::Sg).collect();
        // All six ordered pairs within distance 2.
        let ids = ["a", "b", "c"].map(|w| vocab.index(w).unwrap());
        let expected: Vec<_> = enumerate_pairs(3, 2)
            .into_iter()
            .map(|(t, c)| TrainingExample {
                input_indices: vec![ids[t]],
                target_index: ids[c],
            })
            .collect();
        assert_eq!(got.len(), 6);
        assert_eq!(got, expected);
    }

    #[test]
    fn cbow_contexts_match_enumeration() {
        let sentences = vec![sent(&["a", "b", "c"])];
        let vocab = build_vocab(&sentences, 1).unwrap();
        let got: Vec<_> = generate_examples(&sentences, &vocab, 2, Mode::Cbow).collect();
        let ids = ["a", "b", "c"].map(|w| vocab.index(w).unwrap());
        assert_eq!(got.len(), 3);
        assert_eq!(got[0].input_indices, vec![ids[1], ids[2]]);
        assert_eq!(got[0].target_index, ids[0]);
        assert_eq!(got[1].input_indices, vec![ids[0], ids[2]]);
        assert_eq!(got[2].input_indices, vec![ids[0], ids[1]]);
    }

    #[test]
    fn single_token_sentence_emits_nothing() {
        let sentences = vec![sent(&["a"])];
        let vocab = build_vocab(&sentences, 1).unwrap();
        assert_eq!(
            generate_examples(&sentences, &vocab, 4, Mode::Sg).count(),
            0
        );
        assert_eq!(
            generate_examples(&sentences, &vocab, 4, Mode::Cbow).count(),
            0
        );
    }

    #[test]
    fn oov_tokens_dropped_before_windowing() {
        // "x" is out of vocabulary, so "a" and "b" become adjacent.
        let train = vec![sent(&["a", "b", "a", "b"])];
        let vocab = build_vocab(&train, 1).unwrap();
        let sentences = vec![sent(&["a", "x", "b"])];
        let got: Vec<_> = generate_examples(&sentences, &vocab, 1, Mode::Sg).collect();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].input_indices, vec![vocab.index("a").unwrap()]);
        assert_eq!(got[0].target_index, vocab.index("b").unwrap());
    }

    #[test]
    fn sg_count_equals_cbow_context_total() {
        // Brute-force equivalence for every sentence length <= 6, window <= 4.
        for len in 1..=6usize {
            let words: Vec<String> = (0..len).map(|i| format!("w{i}")).collect();
            let sentences = vec![CleanSentence::new(words)];
            let vocab = build_vocab(&sentences, 1).unwrap();
            for window in 1..=4usize {
                let sg = generate_examples(&sentences, &vocab, window, Mode::Sg).count();
                let cbow_ctx: usize = generate_examples(&sentences, &vocab, window, Mode::Cbow)
                    .map(|e| e.input_indices.len())
                    .sum();
                assert_eq!(sg, cbow_ctx, "len {len} window {window}");
                assert_eq!(sg, enumerate_pairs(len, window).len());
            }
        }
    }

    #[test]
    fn encode_singleton_is_one_hot() {
        let ex = TrainingExample {
            input_indices: vec![2],
            target_index: 0,
        };
        assert_eq!(encode_input(&ex, 4), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn encode_two_point_mean() {
        let ex = TrainingExample {
            input_indices: vec![0, 3],
            target_index: 1,
        };
        assert_eq!(encode_input(&ex, 4), vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn encode_counts_multiplicity() {
        let ex = TrainingExample {
            input_indices: vec![1, 1, 2],
            target_index: 0,
        };
        let x = encode_input(&ex, 4);
        assert_eq!(x[1], 2.0 / 3.0);
        assert_eq!(x[2], 1.0 / 3.0);
        assert_eq!(x[0], 0.0);
        assert_eq!(x[3], 0.0);
    }

    proptest! {
        #[test]
        fn encode_input_is_unit_mass(indices in proptest::collection::vec(0usize..20, 1..12)) {
            let ex = TrainingExample { input_indices: indices, target_index: 0 };
            let x = encode_input(&ex, 20);
            prop_assert!(x.iter().all(|&v| v >= 0.0));
            prop_assert_eq!(x.iter().sum::<f64>(), 1.0);
        }

        #[test]
        fn dense_encoding_matches_sparse_column_average(
            indices in proptest::collection::vec(0usize..6, 1..9),
            weights in proptest::collection::vec(-1.0f64..1.0, 4 * 6),
        ) {
            // W x with the dense encoding must equal the average of the
            // selected columns of W (the sparse view of the same product).
            let ex = TrainingExample { input_indices: indices.clone(), target_index: 0 };
            let x = encode_input(&ex, 6);
            let w = |i: usize, j: usize| weights[i * 6 + j];
            for row in 0..4 {
                let dense: f64 = (0..6).map(|j| w(row, j) * x[j]).sum();
                let sparse: f64 = indices.iter().map(|&j| w(row, j)).sum::<f64>()
                    / indices.len() as f64;
                prop_assert!((dense - sparse).abs() < 1e-12, "row {row}: {dense} vs {sparse}");
            }
        }
    }

    #[test]
    fn example_lists_bounded_by_window() {
        let words: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
        let sentences = vec![CleanSentence::new(words)];
        let vocab = build_vocab(&sentences, 1).unwrap();
        for ex in generate_examples(&sentences, &vocab, 3, Mode::Cbow) {
            assert!(ex.input_indices.len() <= 6);
            assert!(ex.input_indices.iter().all(|&i| i < vocab.size()));
        }
    }
}
