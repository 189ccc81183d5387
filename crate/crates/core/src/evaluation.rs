//! Taxonomy quality metrics: reference-ontology precision, subtree
//! embedding similarity and a 2-D projection of node vectors.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine, EmbeddingModel, PhraseVector};
use crate::taxonomy::{NodeId, Taxonomy, TaxonomyError};
use crate::text::normalize_phrase;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("reference ontology is empty")]
    EmptyReference,
    #[error("no reference edge has both endpoints among the taxonomy labels")]
    EmptyOverlap,
    #[error("the embedding strategy needs a trained model")]
    ModelRequired,
    #[error("need at least {need} embeddable nodes, found {found}")]
    TooFewEmbeddable { need: usize, found: usize },
    #[error("cannot sample {size} labels from {available}")]
    InsufficientLabels { size: usize, available: usize },
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

/// Directed (child, parent) hypernym pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReferenceOntology {
    edges: BTreeSet<(String, String)>,
    vocabulary: HashSet<String>,
}

impl ReferenceOntology {
    /// Normalizes both sides, drops duplicates and skips self-loops and
    /// pairs that normalize to nothing.
    pub fn from_pairs<A: AsRef<str>, B: AsRef<str>>(pairs: impl IntoIterator<Item = (A, B)>) -> Self {
        let mut r = Self::default();
        for (c, p) in pairs {
            let (c, p) = (normalize_phrase(c.as_ref()), normalize_phrase(p.as_ref()));
            if !c.is_empty() && !p.is_empty() && c != p {
                r.insert(c, p);
            }
        }
        r
    }

    fn insert(&mut self, c: String, p: String) {
        self.vocabulary.insert(c.clone());
        self.vocabulary.insert(p.clone());
        self.edges.insert((c, p));
    }

    /// Reads `child<TAB>parent` lines. Self-loops are rejected.
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut out = Self::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| EvalError::Malformed {
                line: i + 1,
                msg: msg.to_owned(),
            };
            let (c, p) = line.split_once('\t').ok_or_else(|| bad("expected child<TAB>parent"))?;
            let (c, p) = (normalize_phrase(c), normalize_phrase(p));
            if c.is_empty() || p.is_empty() {
                return Err(bad("empty phrase"));
            }
            if c == p {
                return Err(bad("self-loop"));
            }
            out.insert(c, p);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, child: &str, parent: &str) -> bool {
        // BTreeSet<(String, String)> cannot be probed with borrowed pairs.
        self.edges.contains(&(child.to_owned(), parent.to_owned()))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges.iter().map(|(c, p)| (c.as_str(), p.as_str()))
    }

    pub fn has_phrase(&self, phrase: &str) -> bool {
        self.vocabulary.contains(phrase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    EmbeddingSimilarity,
    Taxonomy,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Random, Strategy::EmbeddingSimilarity, Strategy::Taxonomy];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::EmbeddingSimilarity => "embedding_similarity",
            Self::Taxonomy => "taxonomy",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "embedding_similarity" | "embedding" => Ok(Self::EmbeddingSimilarity),
            "taxonomy" => Ok(Self::Taxonomy),
            _ => Err(EvalError::UnknownStrategy(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionReport {
    pub strategy: Strategy,
    pub numerator: usize,
    pub denominator: usize,
    pub precision: f64,
    /// Only set for [`Strategy::Random`].
    pub seed: Option<u64>,
}

/// Fraction of reference edges (both endpoints among taxonomy labels) that
/// the strategy's proposed parents reproduce.
///
/// Each child of such an edge gets one proposed parent: a seeded uniform
/// draw from the candidate parents, the candidate with the highest cosine,
/// or its actual parent. Candidates exclude the root and the node itself.
/// Children are visited in node-id order.
pub fn reference_precision(
    t: &Taxonomy,
    reference: &ReferenceOntology,
    m: Option<&EmbeddingModel>,
    strategy: Strategy,
    seed: u64,
) -> Result<PrecisionReport> {
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let in_eval = |label: &str| t.find(label).is_some() && reference.has_phrase(label);
    let mut children = BTreeSet::new();
    let mut denominator = 0;
    for (c, p) in reference.edges() {
        if in_eval(c) && in_eval(p) {
            denominator += 1;
            children.insert(t.find(c).expect("checked above"));
        }
    }
    if denominator == 0 {
        return Err(EvalError::EmptyOverlap);
    }

    let candidates: Vec<NodeId> = t.candidate_parents().into_iter().filter(|c| !c.is_root()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = match strategy {
        Strategy::EmbeddingSimilarity => {
            let m = m.ok_or(EvalError::ModelRequired)?;
            candidates
                .iter()
                .map(|&c| m.phrase_vector(t.label(c).expect("candidate is a node")).ok())
                .collect()
        }
        _ => Vec::new(),
    };

    let mut numerator = 0;
    for &c in &children {
        let proposed = match strategy {
            Strategy::Taxonomy => t.parent(c)?,
            Strategy::Random => {
                let pool: Vec<NodeId> = candidates.iter().copied().filter(|&p| p != c).collect();
                pool.choose(&mut rng).copied()
            }
            Strategy::EmbeddingSimilarity => {
                let m = m.expect("checked above");
                m.phrase_vector(t.label(c)?).ok().and_then(|q| {
                    let mut best: Option<(NodeId, f64)> = None;
                    for (&p, v) in candidates.iter().zip(&vectors) {
                        let Some(v) = v else { continue };
                        if p == c {
                            continue;
                        }
                        let s = cosine(&q, v).unwrap_or(f64::NEG_INFINITY);
                        if best.is_none_or(|(_, b)| s > b) {
                            best = Some((p, s));
                        }
                    }
                    best.map(|(p, _)| p)
                })
            }
        };
        if let Some(p) = proposed {
            if reference.contains(t.label(c)?, t.label(p)?) {
                numerator += 1;
            }
        }
    }
    Ok(PrecisionReport {
        strategy,
        numerator,
        denominator,
        precision: numerator as f64 / denominator as f64,
        seed: (strategy == Strategy::Random).then_some(seed),
    })
}

/// Mean cosine over all unordered pairs. `None` with fewer than 2 vectors.
pub fn mean_pairwise_cosine(vectors: &[PhraseVector]) -> Option<f64> {
    let n = vectors.len();
    if n < 2 {
        return None;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += cosine(&vectors[i], &vectors[j]).ok()?;
        }
    }
    Some(total / (n * (n - 1) / 2) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubtreeScore {
    pub score: f64,
    /// Nodes that entered the average.
    pub size: usize,
    /// Nodes left out because their label has no embedding.
    pub skipped: usize,
}

fn embeddable<'a>(m: &EmbeddingModel, labels: impl Iterator<Item = &'a str>) -> (Vec<PhraseVector>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for l in labels {
        match m.phrase_vector(l) {
            Ok(v) => out.push(v),
            Err(_) => skipped += 1,
        }
    }
    (out, skipped)
}

/// Mean pairwise cosine over the subtree rooted at `subtree_root`
/// (inclusive, never counting the global root).
pub fn subtree_similarity(t: &Taxonomy, m: &EmbeddingModel, subtree_root: NodeId) -> Result<SubtreeScore> {
    let ids = t.subtree(subtree_root)?;
    let labels = ids.iter().filter(|id| !id.is_root()).map(|&id| t.label(id).expect("subtree ids exist"));
    let (vectors, skipped) = embeddable(m, labels);
    let score = mean_pairwise_cosine(&vectors).ok_or(EvalError::TooFewEmbeddable {
        need: 2,
        found: vectors.len(),
    })?;
    Ok(SubtreeScore {
        score,
        size: vectors.len(),
        skipped,
    })
}

/// Subtree similarity of a seeded uniform sample of `size` labels.
pub fn random_tree_similarity_baseline<S: AsRef<str>>(
    labels: &[S],
    m: &EmbeddingModel,
    size: usize,
    seed: u64,
) -> Result<f64> {
    if size < 2 || size > labels.len() {
        return Err(EvalError::InsufficientLabels {
            size,
            available: labels.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, labels.len(), size);
    let (vectors, _) = embeddable(m, picked.iter().map(|i| labels[i].as_ref()));
    mean_pairwise_cosine(&vectors).ok_or(EvalError::TooFewEmbeddable {
        need: 2,
        found: vectors.len(),
    })
}

/// Leading principal directions of a set of row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalComponents {
    pub mean: Vec<f64>,
    /// Unit directions, largest variance first. Sign is fixed so that the
    /// largest-magnitude entry is positive.
    pub directions: Vec<Vec<f64>>,
    /// Variance along each direction.
    pub variances: Vec<f64>,
}

const POWER_TOL: f64 = 1e-9;
const POWER_MAX_ITER: usize = 1000;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(c: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    c.iter().map(|row| dot(row, v)).collect()
}

/// Top-`k` components by power iteration with deflation on the covariance
/// matrix. Directions with variance at or below `1e-12 * trace` are
/// reported as zero vectors with zero variance.
pub fn principal_components(rows: &[Vec<f64>], k: usize, seed: u64) -> PrincipalComponents {
    let n = rows.len().max(1) as f64;
    let d = rows.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x / n;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        let c: Vec<f64> = r.iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += c[i] * c[j] / n;
            }
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    let floor = 1e-12 * trace.max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut directions = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for _ in 0..k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        normalize(&mut v);
        for _ in 0..POWER_MAX_ITER {
            let mut next = mat_vec(&cov, &v);
            if normalize(&mut next) == 0.0 {
                v = next;
                break;
            }
            let s = dot(&next, &v).signum();
            let delta = next.iter().zip(&v).map(|(a, b)| (a - s * b).powi(2)).sum::<f64>().sqrt();
            v = next;
            if delta < POWER_TOL {
                break;
            }
        }
        let lambda = dot(&v, &mat_vec(&cov, &v));
        if !(lambda > floor) {
            directions.push(vec![0.0; d]);
            variances.push(0.0);
            continue;
        }
        let pivot = v.iter().copied().fold(0.0, |a: f64, x| if x.abs() > a.abs() { x } else { a });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for i in 0..d {
            for j in 0..d {
                cov[i][j] -= lambda * v[i] * v[j];
            }
        }
        directions.push(v);
        variances.push(lambda);
    }
    PrincipalComponents {
        mean,
        directions,
        variances,
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionRow {
    pub label: String,
    pub group: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    /// Sorted by label.
    pub rows: Vec<ProjectionRow>,
    pub variances: [f64; 2],
    /// Fewer than two nonzero components; every `y` is 0.
    pub rank_deficient: bool,
}

impl Projection {
    /// Writes `label<TAB>group<TAB>x<TAB>y` lines with 6 decimals.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.rows {
            writeln!(w, "{}\t{}\t{:.6}\t{:.6}", r.label, r.group, r.x, r.y)?;
        }
        w.flush()
    }
}

/// Projects every embeddable non-root node onto the top two principal
/// components. Each row's group is the node's ancestor at `group_depth`.
pub fn export_projection(t: &Taxonomy, m: &EmbeddingModel, group_depth: usize, seed: u64) -> Result<Projection> {
    let mut labelled = Vec::new();
    for node in t.nodes().skip(1) {
        if let Ok(v) = m.phrase_vector(&node.label) {
            let group = t.label(t.ancestor_at_depth(node.id, group_depth)?)?;
            labelled.push((node.label.clone(), group.to_owned(), v.values().to_vec()));
        }
    }
    if labelled.len() < 3 {
        return Err(EvalError::TooFewEmbeddable {
            need: 3,
            found: labelled.len(),
        });
    }
    labelled.sort_by(|a, b| a.0.cmp(&b.0));
    let rows: Vec<Vec<f64>> = labelled.iter().map(|(_, _, v)| v.clone()).collect();
    Ok(project(labelled.into_iter().map(|(l, g, _)| (l, g)), &rows, seed))
}

fn project(names: impl Iterator<Item = (String, String)>, rows: &[Vec<f64>], seed: u64) -> Projection {
    let pc = principal_components(rows, 2, seed);
    let rank_deficient = pc.variances[1] == 0.0;
    let out = names
        .zip(rows)
        .map(|((label, group), r)| {
            let c: Vec<f64> = r.iter().zip(&pc.mean).map(|(x, m)| x - m).collect();
            ProjectionRow {
                label,
                group,
                x: dot(&c, &pc.directions[0]),
                y: if rank_deficient { 0.0 } else { dot(&c, &pc.directions[1]) },
            }
        })
        .collect();
    Projection {
        rows: out,
        variances: [pc.variances[0], pc.variances[1]],
        rank_deficient,
    }
}
