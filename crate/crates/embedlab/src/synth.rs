//! Seeded generators for toy experiment inputs: topic-structured corpora,
//! planted Gaussian blobs, and keyword-separable labeled article sets.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{Article, Corpus};
use crate::error::Result;
use crate::eval::intrinsic::LabeledWordSet;
use crate::preprocess::CleanSentence;

pub struct TopicCorpusSpec {
    pub topics: usize,
    pub words_per_topic: usize,
    pub sentences: usize,
    pub tokens_per_sentence: usize,
    /// Words per class in the derived labeled set.
    pub labeled_per_topic: usize,
}

impl Default for TopicCorpusSpec {
    fn default() -> Self {
        TopicCorpusSpec {
            topics: 5,
            words_per_topic: 20,
            sentences: 400,
            tokens_per_sentence: 8,
            labeled_per_topic: 10,
        }
    }
}

/// Sentences drawn from disjoint per-topic vocabularies (topics cycle
/// round-robin so the corpus stays balanced), plus a labeled word set of the
/// first `labeled_per_topic` words of each topic.
pub fn topic_corpus(spec: &TopicCorpusSpec, seed: u64) -> (Vec<CleanSentence>, LabeledWordSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocabularies: Vec<Vec<String>> = (0..spec.topics)
        .map(|t| {
            (0..spec.words_per_topic)
                .map(|w| format!("t{t}w{w:02}"))
                .collect()
        })
        .collect();
    let sentences = (0..spec.sentences)
        .map(|s| {
            let topic = &vocabularies[s % spec.topics];
            CleanSentence::new(
                (0..spec.tokens_per_sentence)
                    .map(|_| topic[rng.gen_range(0..topic.len())].clone())
                    .collect(),
            )
        })
        .collect();
    let labeled = LabeledWordSet::from_pairs(
        vocabularies
            .iter()
            .enumerate()
            .map(|(t, words)| {
                (
                    format!("topic{t}"),
                    words[..spec.labeled_per_topic].to_vec(),
                )
            })
            .collect(),
    )
    .expect("topic vocabularies are disjoint");
    (sentences, labeled)
}

/// `per_blob` points around each center with isotropic Gaussian noise.
pub fn gaussian_blobs(
    centers: &[[f64; 2]],
    per_blob: usize,
    sigma: f64,
    seed: u64,
) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma >= 0");
    let mut points = Vec::with_capacity(centers.len() * per_blob);
    for c in centers {
        for _ in 0..per_blob {
            points.push([c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
        }
    }
    points
}

/// A labeled corpus where every article of class `c` repeats the class
/// keyword among shared filler tokens; trivially separable by keyword.
/// Returns the corpus and its category -> class-id map.
pub fn keyword_corpus(
    classes: usize,
    per_class: usize,
    tokens_per_article: usize,
    seed: u64,
) -> Result<(Corpus, HashMap<String, usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fillers: Vec<String> = (0..6).map(|i| format!("filler{i}")).collect();
    let mut articles = Vec::with_capacity(classes * per_class);
    let mut label_map = HashMap::new();
    for c in 0..classes {
        let category = format!("cat{c}");
        label_map.insert(category.clone(), c);
        let keyword = format!("keyword{c}");
        for a in 0..per_class {
            let mut tokens: Vec<String> = (0..tokens_per_article)
                .map(|_| fillers[rng.gen_range(0..fillers.len())].clone())
                .collect();
            // Plant the keyword three times at spread positions.
            let span = tokens_per_article.max(3);
            for k in 0..3 {
                let pos = (a + k * span / 3) % tokens_per_article;
                tokens[pos] = keyword.clone();
            }
            articles.push(Article {
                id: format!("{c}-{a}"),
                category: category.clone(),
                text: tokens.join(" "),
            });
        }
    }
    Ok((Corpus { articles }, label_map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topic_corpus_is_balanced_and_disjoint() {
        let spec = TopicCorpusSpec::default();
        let (sentences, labeled) = topic_corpus(&spec, 1);
        assert_eq!(sentences.len(), 400);
        assert_eq!(labeled.class_count(), 5);
        assert_eq!(labeled.total_words(), 50);
        // Every token in sentence s belongs to topic s % 5.
        for (s, sentence) in sentences.iter().enumerate() {
            let topic = format!("t{}", s % 5);
            assert!(sentence.tokens.iter().all(|t| t.starts_with(&topic)));
            assert_eq!(sentence.tokens.len(), 8);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let spec = TopicCorpusSpec::default();
        assert_eq!(topic_corpus(&spec, 7).0, topic_corpus(&spec, 7).0);
        let centers = [[0.0, 0.0], [2.0, 2.0]];
        assert_eq!(
            gaussian_blobs(&centers, 5, 0.1, 3),
            gaussian_blobs(&centers, 5, 0.1, 3)
        );
    }

    #[test]
    fn blobs_stay_near_their_centers() {
        let centers = [[0.0, 0.0], [10.0, 0.0]];
        let points = gaussian_blobs(&centers, 20, 0.05, 5);
        assert_eq!(points.len(), 40);
        for (i, p) in points.iter().enumerate() {
            let c = centers[i / 20];
            let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
            assert!(d < 0.5, "point {i} strayed {d}");
        }
    }

    #[test]
    fn keyword_corpus_plants_keywords() {
        let (corpus, map) = keyword_corpus(5, 10, 20, 2).unwrap();
        assert_eq!(corpus.len(), 50);
        assert_eq!(map.len(), 5);
        for article in &corpus.articles {
            let c = map[&article.category];
            assert!(article.text.contains(&format!("keyword{c}")));
        }
    }
}
