//! Seed taxonomy construction and embedding-based expansion.

use std::collections::HashSet;
use std::io::BufRead;

use thiserror::Error;

use crate::embedding::{nearest_neighbor, EmbeddingError, EmbeddingModel, PhraseVector};
use crate::taxonomy::{NodeId, NodeKind, Taxonomy, TaxonomyError};
use crate::text::normalize_phrase;

/// Similarity threshold used when attaching phrases to categories.
pub const DEFAULT_ALPHA: f64 = 0.80;

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("seed has no records")]
    EmptySeed,
    #[error("seed line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("label {0:?} appears more than once in the seed")]
    DuplicateLabel(String),
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("target kinds must be category or keyphrase")]
    InvalidTargetKind,
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedRecord {
    pub category: String,
    pub keywords: Vec<String>,
}

impl SeedRecord {
    /// Normalizes the labels and drops repeated keywords.
    pub fn new(category: &str, keywords: impl IntoIterator<Item = impl AsRef<str>>) -> Self {
        let mut seen = HashSet::new();
        let keywords = keywords
            .into_iter()
            .map(|k| normalize_phrase(k.as_ref()))
            .filter(|k| !k.is_empty() && seen.insert(k.clone()))
            .collect();
        Self {
            category: normalize_phrase(category),
            keywords,
        }
    }
}

/// Parses `category<TAB>kw1|kw2|...` lines. Blank lines are ignored.
pub fn read_seed<R: BufRead>(r: R) -> Result<Vec<SeedRecord>, ExpansionError> {
    let mut records = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (category, keywords) = line.split_once('\t').ok_or_else(|| ExpansionError::Malformed {
            line: i + 1,
            msg: "expected category<TAB>keywords".into(),
        })?;
        let record = SeedRecord::new(category, keywords.split('|'));
        if record.category.is_empty() {
            return Err(ExpansionError::Malformed {
                line: i + 1,
                msg: "empty category".into(),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Builds root -> category -> keyword from seed records.
pub fn bootstrap_seed(records: &[SeedRecord]) -> Result<Taxonomy, ExpansionError> {
    if records.is_empty() {
        return Err(ExpansionError::EmptySeed);
    }
    let mut t = Taxonomy::new();
    for rec in records {
        let cat = t
            .add_node(&rec.category, NodeId::ROOT, NodeKind::Category)
            .map_err(|e| relabel_duplicate(e))?;
        for kw in &rec.keywords {
            t.add_node(kw, cat, NodeKind::Keyphrase)
                .map_err(|e| relabel_duplicate(e))?;
        }
    }
    Ok(t)
}

fn relabel_duplicate(e: TaxonomyError) -> ExpansionError {
    match e {
        TaxonomyError::DuplicateLabel(l) => ExpansionError::DuplicateLabel(l),
        other => other.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    pub phrase: String,
    pub node: NodeId,
    pub parent: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub phrase: String,
    /// `-inf` when the phrase has no embedding or no target exists.
    pub best_similarity: f64,
    pub best_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttachmentReport {
    pub threshold: f64,
    pub attached: Vec<Attachment>,
    pub skipped: Vec<Skipped>,
    /// Phrases that were already node labels.
    pub pre_existing: Vec<String>,
}

/// Attaches each phrase under its nearest target node when the cosine
/// similarity reaches `alpha`.
///
/// The target index is built once from the nodes present before the call,
/// so phrases attached in this pass never become targets themselves.
/// Phrases are processed in input order.
pub fn attach_by_embedding<S: AsRef<str>>(
    t: &mut Taxonomy,
    m: &EmbeddingModel,
    phrases: &[S],
    alpha: f64,
    target_kinds: &[NodeKind],
) -> Result<AttachmentReport, ExpansionError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ExpansionError::InvalidAlpha(alpha));
    }
    if target_kinds.contains(&NodeKind::Root) {
        return Err(ExpansionError::InvalidTargetKind);
    }
    let index: Vec<(String, PhraseVector)> = t
        .nodes()
        .filter(|n| target_kinds.contains(&n.kind))
        .filter_map(|n| m.phrase_vector(&n.label).ok().map(|v| (n.label.clone(), v)))
        .collect();

    let mut report = AttachmentReport {
        threshold: alpha,
        ..Default::default()
    };
    for raw in phrases {
        let phrase = normalize_phrase(raw.as_ref());
        if t.find(&phrase).is_some() {
            report.pre_existing.push(phrase);
            continue;
        }
        let best = m
            .phrase_vector(&phrase)
            .ok()
            .and_then(|q| nearest_neighbor(&index, &q).ok());
        match best {
            Some(n) if n.similarity >= alpha && !phrase.is_empty() => {
                let parent = t.find(n.label).expect("index labels come from the taxonomy");
                let node = t.add_node(&phrase, parent, NodeKind::Keyphrase)?;
                report.attached.push(Attachment {
                    phrase,
                    node,
                    parent: n.label.to_owned(),
                    similarity: n.similarity,
                });
            }
            Some(n) => report.skipped.push(Skipped {
                phrase,
                best_similarity: n.similarity,
                best_label: Some(n.label.to_owned()),
            }),
            None => report.skipped.push(Skipped {
                phrase,
                best_similarity: f64::NEG_INFINITY,
                best_label: None,
            }),
        }
    }
    Ok(report)
}
