//! Subword skip-gram embeddings: training, phrase composition and lookup.
//!
//! A word's vector is the mean of its own input row (when the word is in
//! the vocabulary) and the rows of its hashed character n-gram buckets.
//! Phrase vectors are the L2-normalized mean of their token vectors.

mod io;
pub mod subword;
mod train;
mod vector;

use std::collections::HashMap;

use thiserror::Error;

use crate::text::tokenize;

pub use self::subword::{fnv1a64, ngrams, subword_ids};
pub use self::train::{sgns_gradient, sgns_loss, train, train_lines, SgnsGradient};
pub use self::vector::{cosine, nearest_neighbor, Neighbor, PhraseVector};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("invalid embedding config: {0}")]
    InvalidConfig(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no word reaches min_count {0}")]
    NoVocabulary(u64),
    #[error("phrase {0:?} has no representable tokens")]
    DegeneratePhrase(String),
    #[error("degenerate vector")]
    DegenerateVector,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("nearest-neighbor index is empty")]
    EmptyIndex,
    #[error("model file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EmbeddingError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub dim: usize,
    /// Maximum context offset; the effective window is drawn per position.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to zero.
    pub lr0: f64,
    pub min_count: u64,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub buckets: usize,
    pub subsample_t: f64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr0: 0.05,
            min_count: 2,
            ngram_min: 3,
            ngram_max: 6,
            buckets: 262_144,
            subsample_t: 1e-4,
            seed: 42,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(EmbeddingError::InvalidConfig(m.to_owned()));
        if self.dim == 0 {
            return fail("dim must be >= 1");
        }
        if self.ngram_min == 0 || self.ngram_min > self.ngram_max {
            return fail("need 1 <= ngram_min <= ngram_max");
        }
        if self.buckets == 0 {
            return fail("buckets must be >= 1");
        }
        if self.window == 0 {
            return fail("window must be >= 1");
        }
        if !(self.lr0 > 0.0 && self.subsample_t > 0.0) {
            return fail("rates must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Keeps words seen at least `min_count` times, ordered by descending
    /// count and then by the word itself.
    pub fn from_counts(counts: HashMap<String, u64>, min_count: u64) -> Self {
        let mut entries: Vec<(String, u64)> =
            counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_entries(entries)
    }

    fn from_entries(entries: Vec<(String, u64)>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Self { words, counts, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// A trained embedding model. Immutable after training.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    config: EmbeddingConfig,
    vocab: Vocab,
    /// `(vocab + buckets) x dim`, word rows first.
    input: Vec<f32>,
    /// `vocab x dim`.
    output: Vec<f32>,
}

impl EmbeddingModel {
    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn input_row(&self, row: usize) -> &[f32] {
        let d = self.config.dim;
        &self.input[row * d..(row + 1) * d]
    }

    pub fn output_row(&self, word: usize) -> &[f32] {
        let d = self.config.dim;
        &self.output[word * d..(word + 1) * d]
    }

    /// Input rows composing `token`: the word row (if in vocabulary) then
    /// one row per subword n-gram.
    pub fn token_rows(&self, token: &str) -> Vec<usize> {
        let vocab_len = self.vocab.len();
        self.vocab
            .get(token)
            .into_iter()
            .chain(
                subword_ids(token, self.config.ngram_min, self.config.ngram_max, self.config.buckets)
                    .into_iter()
                    .map(|b| vocab_len + b),
            )
            .collect()
    }

    /// Mean of the token's rows, or `None` when it has none.
    pub fn word_vector(&self, token: &str) -> Option<Vec<f64>> {
        let rows = self.token_rows(token);
        if rows.is_empty() {
            return None;
        }
        let mut acc = vec![0.0f64; self.dim()];
        for &r in &rows {
            for (a, &x) in acc.iter_mut().zip(self.input_row(r)) {
                *a += f64::from(x);
            }
        }
        let n = rows.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Some(acc)
    }

    /// Normalized mean of the phrase's token vectors.
    pub fn phrase_vector(&self, phrase: &str) -> Result<PhraseVector> {
        let mut acc = vec![0.0f64; self.dim()];
        let mut used = 0usize;
        for token in tokenize(phrase) {
            if let Some(v) = self.word_vector(&token) {
                acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
                used += 1;
            }
        }
        if used == 0 {
            return Err(EmbeddingError::DegeneratePhrase(phrase.to_owned()));
        }
        acc.iter_mut().for_each(|a| *a /= used as f64);
        let v = PhraseVector::from_raw(acc);
        if v.is_degenerate() {
            return Err(EmbeddingError::DegeneratePhrase(phrase.to_owned()));
        }
        Ok(v)
    }

    /// Cosine similarity between two phrases.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        cosine(&self.phrase_vector(a)?, &self.phrase_vector(b)?)
    }
}
