//! Candidate listing generation for a search keyword, by insight substring
//! match or by shared taxonomy categories.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{nearest_neighbor, EmbeddingModel, PhraseVector};
use crate::taxonomy::{NodeId, Taxonomy};
use crate::text::normalize_phrase;

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error("query is empty after normalization")]
    EmptyQuery,
    #[error("resolution must be at least 1")]
    ZeroResolution,
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: duplicate listing id {id:?}")]
    DuplicateId { id: String, line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = RecommendError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Listing {
    pub listing_id: String,
    pub insights: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
}

impl Listing {
    /// Normalizes insights, dropping empty and repeated ones.
    pub fn new(id: impl Into<String>, insights: impl IntoIterator<Item = impl AsRef<str>>, region: Option<String>) -> Self {
        let mut seen = HashSet::new();
        let insights = insights
            .into_iter()
            .map(|i| normalize_phrase(i.as_ref()))
            .filter(|i| !i.is_empty() && seen.insert(i.clone()))
            .collect();
        Self {
            listing_id: id.into(),
            insights,
            region,
        }
    }
}

/// Reads one JSON listing per line. Blank lines are skipped.
pub fn read_listings<R: BufRead>(r: R) -> Result<Vec<Listing>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: Listing = serde_json::from_str(&line).map_err(|e| RecommendError::Malformed {
            line: i + 1,
            msg: e.to_string(),
        })?;
        if raw.listing_id.is_empty() {
            return Err(RecommendError::Malformed {
                line: i + 1,
                msg: "empty listing_id".into(),
            });
        }
        if !ids.insert(raw.listing_id.clone()) {
            return Err(RecommendError::DuplicateId {
                id: raw.listing_id,
                line: i + 1,
            });
        }
        out.push(Listing::new(raw.listing_id, raw.insights, raw.region));
    }
    Ok(out)
}

pub fn load_listings(path: &std::path::Path) -> Result<Vec<Listing>> {
    read_listings(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Baseline,
    Taxonomy,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Baseline => "baseline",
            Self::Taxonomy => "taxonomy",
        })
    }
}

impl FromStr for Method {
    type Err = RecommendError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Self::Baseline),
            "taxonomy" => Ok(Self::Taxonomy),
            _ => Err(RecommendError::UnknownMethod(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationResult {
    pub query: String,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u32>,
    pub query_categories: BTreeSet<String>,
    /// Taxonomy method only: the query mapped to no category.
    pub query_unmapped: bool,
    pub candidates: BTreeSet<String>,
    /// Listing id to matched insights (baseline) or shared categories.
    pub matches: BTreeMap<String, BTreeSet<String>>,
}

/// Compact per-query record for result files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultSummary<'a> {
    pub query: &'a str,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u32>,
    pub count: usize,
    pub candidates: Vec<&'a str>,
}

impl RecommendationResult {
    pub fn summary(&self) -> ResultSummary<'_> {
        ResultSummary {
            query: &self.query,
            method: self.method,
            resolution: self.resolution,
            count: self.candidates.len(),
            candidates: self.candidates.iter().map(String::as_str).collect(),
        }
    }
}

/// Listings with an insight that contains the normalized query.
pub fn baseline_candidates(store: &[Listing], query: &str) -> Result<RecommendationResult> {
    let q = normalize_phrase(query);
    if q.is_empty() {
        return Err(RecommendError::EmptyQuery);
    }
    let mut matches = BTreeMap::new();
    for l in store {
        let hits: BTreeSet<String> = l.insights.iter().filter(|i| i.contains(&q)).cloned().collect();
        if !hits.is_empty() {
            matches.insert(l.listing_id.clone(), hits);
        }
    }
    Ok(RecommendationResult {
        query: q,
        method: Method::Baseline,
        resolution: None,
        query_categories: BTreeSet::new(),
        query_unmapped: false,
        candidates: matches.keys().cloned().collect(),
        matches,
    })
}

/// Maps phrases to taxonomy categories. The embedding index over all
/// non-root nodes is built once.
pub struct CategoryMapper<'a> {
    t: &'a Taxonomy,
    m: &'a EmbeddingModel,
    index: Vec<(&'a str, PhraseVector)>,
}

impl<'a> CategoryMapper<'a> {
    pub fn new(t: &'a Taxonomy, m: &'a EmbeddingModel) -> Self {
        let index = t
            .nodes()
            .skip(1)
            .filter_map(|n| m.phrase_vector(&n.label).ok().map(|v| (n.label.as_str(), v)))
            .collect();
        Self { t, m, index }
    }

    /// The node a normalized phrase is anchored to: an exact label match,
    /// else the nearest node when its cosine reaches `alpha`.
    pub fn anchor(&self, phrase: &str, alpha: f64) -> Option<NodeId> {
        if let Some(id) = self.t.find(phrase) {
            if !id.is_root() {
                return Some(id);
            }
        }
        let q = self.m.phrase_vector(phrase).ok()?;
        let n = nearest_neighbor(&self.index, &q).ok()?;
        (n.similarity >= alpha).then(|| self.t.find(n.label).expect("index labels come from the taxonomy"))
    }

    fn category(&self, anchor: NodeId, r: u32) -> &'a str {
        let up = self.t.ancestor_at_resolution(anchor, r).expect("anchor is a non-root node");
        self.t.label(up).expect("ancestor exists")
    }

    pub fn categories(&self, phrase: &str, r: u32, alpha: f64) -> Result<BTreeSet<String>> {
        check_args(r, alpha)?;
        let phrase = normalize_phrase(phrase);
        Ok(self
            .anchor(&phrase, alpha)
            .map(|a| self.category(a, r).to_owned())
            .into_iter()
            .collect())
    }
}

fn check_args(r: u32, alpha: f64) -> Result<()> {
    if r == 0 {
        return Err(RecommendError::ZeroResolution);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(RecommendError::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Category label of the phrase's anchor `r` steps up, or nothing when the
/// phrase cannot be anchored.
pub fn map_to_categories(t: &Taxonomy, m: &EmbeddingModel, phrase: &str, r: u32, alpha: f64) -> Result<BTreeSet<String>> {
    CategoryMapper::new(t, m).categories(phrase, r, alpha)
}

/// Listings whose insights share a category with the query at resolution
/// `r`.
pub fn taxonomy_candidates(
    store: &[Listing],
    t: &Taxonomy,
    m: &EmbeddingModel,
    query: &str,
    r: u32,
    alpha: f64,
) -> Result<RecommendationResult> {
    taxonomy_candidates_with(store, &CategoryMapper::new(t, m), query, r, alpha)
}

/// [`taxonomy_candidates`] with a prebuilt mapper.
pub fn taxonomy_candidates_with(
    store: &[Listing],
    mapper: &CategoryMapper<'_>,
    query: &str,
    r: u32,
    alpha: f64,
) -> Result<RecommendationResult> {
    check_args(r, alpha)?;
    let q = normalize_phrase(query);
    if q.is_empty() {
        return Err(RecommendError::EmptyQuery);
    }
    let query_categories = mapper.categories(&q, r, alpha)?;
    let mut matches = BTreeMap::new();
    if !query_categories.is_empty() {
        let mut anchors: HashMap<&str, Option<&str>> = HashMap::new();
        for l in store {
            let mut hits = BTreeSet::new();
            for i in &l.insights {
                let cat = *anchors
                    .entry(i.as_str())
                    .or_insert_with(|| mapper.anchor(i, alpha).map(|a| mapper.category(a, r)));
                if let Some(c) = cat {
                    if query_categories.contains(c) {
                        hits.insert(c.to_owned());
                    }
                }
            }
            if !hits.is_empty() {
                matches.insert(l.listing_id.clone(), hits);
            }
        }
    }
    Ok(RecommendationResult {
        query: q,
        method: Method::Taxonomy,
        resolution: Some(r),
        query_unmapped: query_categories.is_empty(),
        query_categories,
        candidates: matches.keys().cloned().collect(),
        matches,
    })
}
