//! Labeled article collections loaded from JSON Lines files, plus
//! corpus-level statistics.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single labeled document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub id: String,
    pub category: String,
    pub text: String,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub articles: Vec<Article>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }
}

#[derive(Deserialize)]
struct ArticleLine {
    id: Option<String>,
    category: String,
    text: String,
    #[serde(default)]
    #[allow(dead_code)]
    title: Option<String>,
}

/// Loads a corpus from a JSONL file: one `{"id", "category", "text"}` object
/// per line (`id` and `title` optional). Articles keep file order; missing
/// ids become the zero-based line index.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut articles = Vec::new();
    let mut seen_ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ArticleLine =
            serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                path: path.to_path_buf(),
                line: line_no,
                msg: e.to_string(),
            })?;
        if parsed.text.trim().is_empty() {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: line_no,
                msg: "article text is empty".into(),
            });
        }
        let id = parsed.id.unwrap_or_else(|| i.to_string());
        if !seen_ids.insert(id.clone()) {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("duplicate article id {id:?}"),
            });
        }
        articles.push(Article {
            id,
            category: parsed.category,
            text: parsed.text,
        });
    }
    if articles.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(Corpus { articles })
}

/// Corpus-level counts and their derived ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub article_count: u64,
    pub sentence_count: u64,
    pub word_count: u64,
    pub vocab_size: u64,
    pub avg_sentences_per_article: f64,
    pub avg_words_per_sentence: f64,
    pub avg_words_per_article: f64,
}

impl CorpusStats {
    /// Builds the stats record from raw counts; ratios are the exact
    /// quotients (0 when the denominator is 0).
    pub fn from_counts(
        article_count: u64,
        sentence_count: u64,
        word_count: u64,
        vocab_size: u64,
    ) -> Result<Self> {
        if article_count == 0 {
            return Err(Error::EmptyCorpus);
        }
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        Ok(CorpusStats {
            article_count,
            sentence_count,
            word_count,
            vocab_size,
            avg_sentences_per_article: ratio(sentence_count, article_count),
            avg_words_per_sentence: ratio(word_count, sentence_count),
            avg_words_per_article: ratio(word_count, article_count),
        })
    }
}

/// Computes corpus statistics from per-article tokenized sentences
/// (`tokenized[article][sentence] = tokens`).
pub fn compute_stats(corpus: &Corpus, tokenized: &[Vec<Vec<String>>]) -> Result<CorpusStats> {
    if corpus.is_empty() || tokenized.len() != corpus.len() {
        return Err(Error::EmptyCorpus);
    }
    let mut sentence_count = 0u64;
    let mut word_count = 0u64;
    let mut vocab = HashSet::new();
    for article in tokenized {
        sentence_count += article.len() as u64;
        for sentence in article {
            word_count += sentence.len() as u64;
            for token in sentence {
                vocab.insert(token.as_str());
            }
        }
    }
    CorpusStats::from_counts(
        corpus.len() as u64,
        sentence_count,
        word_count,
        vocab.len() as u64,
    )
}
