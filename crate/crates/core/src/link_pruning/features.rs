use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, EmbeddingModel, PhraseVector};
use crate::taxonomy::{NodeId, Taxonomy};

/// Hand-built features of a (child, parent) label pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Embedding cosine of the two labels; 0 when either has no embedding.
    pub cosine_sim: f64,
    pub trigram_jaccard: f64,
    /// Shared tokens over the token union.
    pub token_overlap: f64,
    /// 1 when one non-empty label contains the other.
    pub substring_flag: f64,
    /// `|len(child) - len(parent)| / max(len)`, in characters.
    pub len_diff: f64,
    /// Parent depth over the taxonomy's max depth.
    pub parent_depth_norm: f64,
}

impl FeatureVector {
    pub const LEN: usize = 6;

    pub fn to_array(&self) -> [f64; Self::LEN] {
        [
            self.cosine_sim,
            self.trigram_jaccard,
            self.token_overlap,
            self.substring_flag,
            self.len_diff,
            self.parent_depth_norm,
        ]
    }

    /// Computes every label-only feature. `cosine_sim` and
    /// `parent_depth_norm` are left for the caller.
    pub fn lexical(child: &str, parent: &str) -> Self {
        Self {
            trigram_jaccard: jaccard(&char_trigrams(child), &char_trigrams(parent)),
            token_overlap: token_overlap(child, parent),
            substring_flag: if !child.is_empty() && !parent.is_empty() && (child.contains(parent) || parent.contains(child)) {
                1.0
            } else {
                0.0
            },
            len_diff: len_diff(child, parent),
            ..Default::default()
        }
    }
}

/// Character trigrams of the raw label (no boundary markers).
pub fn char_trigrams(label: &str) -> HashSet<String> {
    let chars: Vec<char> = label.chars().collect();
    chars.windows(3).map(|w| w.iter().collect()).collect()
}

fn jaccard<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn token_overlap(a: &str, b: &str) -> f64 {
    let ta: HashSet<&str> = a.split(' ').filter(|t| !t.is_empty()).collect();
    let tb: HashSet<&str> = b.split(' ').filter(|t| !t.is_empty()).collect();
    jaccard(&ta, &tb)
}

fn len_diff(a: &str, b: &str) -> f64 {
    let (la, lb) = (a.chars().count(), b.chars().count());
    let max = la.max(lb);
    if max == 0 {
        0.0
    } else {
        la.abs_diff(lb) as f64 / max as f64
    }
}

/// Computes [`FeatureVector`]s with phrase vectors cached per label.
///
/// Build it with [`FeatureExtractor::with_taxonomy`] so that every node
/// label is embedded up front; other labels are embedded on demand.
#[derive(Debug, Clone)]
pub struct FeatureExtractor<'m> {
    model: &'m EmbeddingModel,
    vectors: HashMap<String, Option<PhraseVector>>,
}

impl<'m> FeatureExtractor<'m> {
    pub fn new(model: &'m EmbeddingModel) -> Self {
        Self { model, vectors: HashMap::new() }
    }

    pub fn with_taxonomy(model: &'m EmbeddingModel, t: &Taxonomy) -> Self {
        let mut fx = Self::new(model);
        fx.warm(t.nodes().map(|n| n.label.as_str()));
        fx
    }

    pub fn model(&self) -> &'m EmbeddingModel {
        self.model
    }

    /// Embeds and caches the given labels.
    pub fn warm<'a>(&mut self, labels: impl IntoIterator<Item = &'a str>) {
        for l in labels {
            if !self.vectors.contains_key(l) {
                let v = self.model.phrase_vector(l).ok();
                self.vectors.insert(l.to_owned(), v);
            }
        }
    }

    fn vector(&self, label: &str) -> Option<PhraseVector> {
        match self.vectors.get(label) {
            Some(v) => v.clone(),
            None => self.model.phrase_vector(label).ok(),
        }
    }

    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        match (self.vector(a), self.vector(b)) {
            (Some(x), Some(y)) => cosine(&x, &y).unwrap_or(0.0),
            _ => 0.0,
        }
    }

    pub fn features(&self, child: &str, parent: &str, parent_depth_norm: f64) -> FeatureVector {
        FeatureVector {
            cosine_sim: self.cosine(child, parent),
            parent_depth_norm,
            ..FeatureVector::lexical(child, parent)
        }
    }

    /// Features of `child` under the taxonomy node `parent`, with depth
    /// normalized by `max_depth`.
    pub fn edge_features(&self, t: &Taxonomy, child: &str, parent: NodeId, max_depth: usize) -> FeatureVector {
        let depth = t.depth(parent).unwrap_or(0);
        let norm = if max_depth == 0 { 0.0 } else { depth as f64 / max_depth as f64 };
        let label = t.label(parent).unwrap_or_default();
        self.features(child, label, norm)
    }

    /// Features for a labeled pair, looking the parent's depth up in `t`
    /// (0 when the parent is not a node).
    pub fn pair_features(&self, t: &Taxonomy, child: &str, parent: &str, max_depth: usize) -> FeatureVector {
        match t.find(parent) {
            Some(p) => self.edge_features(t, child, p, max_depth),
            None => self.features(child, parent, 0.0),
        }
    }
}
