//! Seeded synthetic fixtures: topic corpora, clustered taxonomies,
//! reference ontologies and listing stores.
//!
//! Words are pronounceable pseudo-words so that subword n-grams behave like
//! natural vocabulary without carrying meaning across topics.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingConfig;
use crate::evaluation::ReferenceOntology;
use crate::recommender::Listing;
use crate::taxonomy::{NodeId, NodeKind, Taxonomy};

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "kl", "pl",
    "st", "tr", "sh", "ch",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou", "ea"];

/// `n` distinct pseudo-words of two or three syllables, none of which is in
/// `taken`. New words are added to `taken`.
pub fn pseudo_words(rng: &mut impl Rng, n: usize, taken: &mut HashSet<String>) -> Vec<String> {
    words(rng, n, taken, false)
}

/// Like [`pseudo_words`], but no returned word is a substring of another
/// word in `taken`, or the other way round.
pub fn unnested_words(rng: &mut impl Rng, n: usize, taken: &mut HashSet<String>) -> Vec<String> {
    words(rng, n, taken, true)
}

fn words(rng: &mut impl Rng, n: usize, taken: &mut HashSet<String>, unnested: bool) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).unwrap());
            w.push_str(VOWELS.choose(rng).unwrap());
        }
        if rng.random_bool(0.5) {
            w.push_str(ONSETS[..14].choose(rng).unwrap());
        }
        if unnested && taken.iter().any(|t| t.contains(&w) || w.contains(t.as_str())) {
            continue;
        }
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Two disjoint vocabularies; every sentence draws from a single topic.
#[derive(Debug, Clone)]
pub struct TwoTopicCorpus {
    pub topics: [Vec<String>; 2],
    pub lines: Vec<String>,
}

pub fn two_topic_corpus(seed: u64, sentences: usize, words_per_topic: usize) -> TwoTopicCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = HashSet::new();
    let topics = [
        pseudo_words(&mut rng, words_per_topic, &mut taken),
        pseudo_words(&mut rng, words_per_topic, &mut taken),
    ];
    let lines = (0..sentences)
        .map(|i| {
            let vocab = &topics[i % 2];
            let len = rng.random_range(6..=12);
            (0..len)
                .map(|_| vocab.choose(&mut rng).unwrap().as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    TwoTopicCorpus { topics, lines }
}

/// Shape and sentence mix of a clustered fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSpec {
    pub topics: usize,
    pub subtopics: usize,
    pub leaves: usize,
    pub sentences: usize,
    /// Chance a token is a leaf of the sentence's own subtopic.
    pub own_rate: f64,
    /// Chance a token is a leaf of a sibling subtopic.
    pub sibling_rate: f64,
    /// Chance a category label token names the own subtopic rather than
    /// the topic or a sibling subtopic. The rest of the tokens are labels.
    pub label_focus: f64,
    pub seed: u64,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        Self {
            topics: 4,
            subtopics: 4,
            leaves: 8,
            sentences: 6000,
            own_rate: 0.7,
            sibling_rate: 0.2,
            label_focus: 0.05,
            seed: 42,
        }
    }
}

/// Three-level ground-truth taxonomy (topic, subtopic, leaf) and a corpus
/// whose sentences each follow one subtopic.
#[derive(Debug, Clone)]
pub struct ClusteredFixture {
    pub truth: Taxonomy,
    pub topics: Vec<NodeId>,
    /// Per topic, its subtopics.
    pub subtopics: Vec<Vec<NodeId>>,
    /// Per subtopic (flattened in topic order), its leaves.
    pub leaves: Vec<Vec<NodeId>>,
    pub lines: Vec<String>,
}

/// Training settings for the clustered corpus. Its vocabulary is small
/// enough that five epochs leave every vector near the common direction.
pub fn clustered_embedding_config() -> EmbeddingConfig {
    EmbeddingConfig {
        epochs: 20,
        ..Default::default()
    }
}

pub fn clustered_fixture(spec: &ClusterSpec) -> ClusteredFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut taken = HashSet::new();
    let mut truth = Taxonomy::new();
    let (mut topics, mut subtopics, mut leaves) = (Vec::new(), Vec::new(), Vec::new());
    let total = spec.topics * (1 + spec.subtopics * (1 + spec.leaves));
    let mut names = unnested_words(&mut rng, total, &mut taken).into_iter();
    for _ in 0..spec.topics {
        let t = truth.add_node(&names.next().unwrap(), NodeId::ROOT, NodeKind::Category).unwrap();
        let mut subs = Vec::new();
        for _ in 0..spec.subtopics {
            let s = truth.add_node(&names.next().unwrap(), t, NodeKind::Category).unwrap();
            let ls: Vec<NodeId> = (0..spec.leaves)
                .map(|_| truth.add_node(&names.next().unwrap(), s, NodeKind::Keyphrase).unwrap())
                .collect();
            subs.push(s);
            leaves.push(ls);
        }
        topics.push(t);
        subtopics.push(subs);
    }

    let label = |id: NodeId| truth.label(id).unwrap();
    let mut lines = Vec::with_capacity(spec.sentences);
    for _ in 0..spec.sentences {
        let ti = rng.random_range(0..spec.topics);
        let si = rng.random_range(0..spec.subtopics);
        let own = &leaves[ti * spec.subtopics + si];
        let len = rng.random_range(8..=12);
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let u: f64 = rng.random();
            let w = if u < spec.own_rate {
                *own.choose(&mut rng).unwrap()
            } else if u < spec.own_rate + spec.sibling_rate && spec.subtopics > 1 {
                let other = (si + rng.random_range(1..spec.subtopics)) % spec.subtopics;
                *leaves[ti * spec.subtopics + other].choose(&mut rng).unwrap()
            } else if rng.random_bool(spec.label_focus) {
                subtopics[ti][si]
            } else if rng.random_bool(0.5) {
                topics[ti]
            } else {
                *subtopics[ti].choose(&mut rng).unwrap()
            };
            words.push(label(w));
        }
        lines.push(words.join(" "));
    }
    ClusteredFixture {
        truth,
        topics,
        subtopics,
        leaves,
        lines,
    }
}

/// A seeded `keep` fraction of the tree's non-root edges, root edges
/// excluded.
pub fn reference_subset(t: &Taxonomy, keep: f64, seed: u64) -> ReferenceOntology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(&str, &str)> = t
        .nodes()
        .filter_map(|n| n.parent.filter(|p| !p.is_root()).map(|p| (n.label.as_str(), t.label(p).unwrap())))
        .filter(|_| rng.random_bool(keep))
        .collect();
    ReferenceOntology::from_pairs(pairs)
}

/// Moves a seeded `fraction` of the leaves (nodes without children, depth
/// at least 2) under a different, randomly chosen parent of the same depth
/// as the original. Returns the moved nodes.
pub fn corrupt_leaves(t: &mut Taxonomy, fraction: f64, seed: u64) -> Vec<NodeId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaves: Vec<NodeId> = t
        .ids()
        .filter(|&id| t.children(id).unwrap().is_empty() && t.depth(id).unwrap() >= 2)
        .collect();
    let count = (leaves.len() as f64 * fraction).round() as usize;
    let mut picked: Vec<NodeId> = rand::seq::index::sample(&mut rng, leaves.len(), count)
        .into_iter()
        .map(|i| leaves[i])
        .collect();
    picked.sort();
    for &k in &picked {
        let parent = t.parent(k).unwrap().unwrap();
        let depth = t.depth(parent).unwrap();
        let options: Vec<NodeId> = t
            .ids()
            .filter(|&p| p != parent && !p.is_root() && t.depth(p).unwrap() == depth && t.kind(p).unwrap() != NodeKind::Keyphrase)
            .collect();
        if let Some(&p) = options.choose(&mut rng) {
            t.move_node(k, p).unwrap();
        }
    }
    picked
}

/// Moves a seeded `fraction` of the non-root nodes under a random wrong
/// non-root parent outside their own subtree. Nodes with no such parent are
/// left alone. Returns the moved nodes with their original parents.
pub fn corrupt_nodes(t: &mut Taxonomy, fraction: f64, seed: u64) -> Vec<(NodeId, NodeId)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = t.len() - 1;
    let count = (n as f64 * fraction).round() as usize;
    let mut picked: Vec<NodeId> = rand::seq::index::sample(&mut rng, n, count)
        .into_iter()
        .map(|i| NodeId(i as u32 + 1))
        .collect();
    picked.sort();
    let mut moved = Vec::new();
    for k in picked {
        let parent = t.parent(k).unwrap().unwrap();
        let options: Vec<NodeId> = t
            .ids()
            .filter(|&p| !p.is_root() && p != parent && !t.is_in_subtree(p, k))
            .collect();
        if let Some(&p) = options.choose(&mut rng) {
            t.move_node(k, p).unwrap();
            moved.push((k, parent));
        }
    }
    moved
}

/// A random tree of `n` nodes including the root. Each new node picks a
/// uniformly random existing parent; labels are `node <i>`.
pub fn random_tree(rng: &mut impl Rng, n: usize) -> Taxonomy {
    let mut t = Taxonomy::new();
    for i in 1..n {
        let parent = NodeId(rng.random_range(0..i as u32));
        let kind = if parent.is_root() { NodeKind::Category } else { NodeKind::Keyphrase };
        t.add_node(&format!("node {i}"), parent, kind).unwrap();
    }
    t
}

/// Listings whose insights are leaf labels of one subtopic (sometimes a
/// sibling subtopic) plus noise words unknown to the taxonomy. All words
/// are unnested, so substring matches are exact label matches.
pub fn listing_store(f: &ClusteredFixture, listings: usize, seed: u64) -> Vec<Listing> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken: HashSet<String> = f.truth.nodes().map(|n| n.label.clone()).collect();
    let noise = unnested_words(&mut rng, 60, &mut taken);
    let groups = &f.leaves;
    let per_topic = f.subtopics.first().map_or(1, Vec::len);
    (0..listings)
        .map(|i| {
            let g = rng.random_range(0..groups.len());
            let mut insights: Vec<&str> = Vec::new();
            for _ in 0..rng.random_range(1..=3) {
                insights.push(f.truth.label(*groups[g].choose(&mut rng).unwrap()).unwrap());
            }
            if rng.random_bool(0.3) {
                let topic_start = g / per_topic * per_topic;
                let sib = topic_start + rng.random_range(0..per_topic);
                insights.push(f.truth.label(*groups[sib].choose(&mut rng).unwrap()).unwrap());
            }
            for _ in 0..rng.random_range(0..=2) {
                insights.push(noise.choose(&mut rng).unwrap());
            }
            insights.shuffle(&mut rng);
            Listing::new(format!("z{i:04}"), insights, None)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unnested_words_are_unnested() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut taken = HashSet::new();
        let ws = unnested_words(&mut rng, 300, &mut taken);
        for a in &ws {
            for b in &ws {
                assert!(a == b || !a.contains(b.as_str()), "{a} contains {b}");
            }
        }
    }

    #[test]
    fn clustered_shape() {
        let f = clustered_fixture(&ClusterSpec {
            sentences: 50,
            ..Default::default()
        });
        let s = f.truth.stats();
        assert_eq!((s.num_nodes, s.max_depth, s.num_leaves), (1 + 4 + 16 + 128, 3, 128));
        assert_eq!(f.lines.len(), 50);
        let r = reference_subset(&f.truth, 1.0, 0);
        assert_eq!(r.len(), 16 + 128);
    }

    #[test]
    fn corruption_keeps_a_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut t = random_tree(&mut rng, 200);
        let moved = corrupt_nodes(&mut t, 0.2, 3);
        assert!(moved.len() >= 35);
        t.validate().unwrap();
        assert_eq!(t.len(), 200);

        let mut f = clustered_fixture(&ClusterSpec {
            sentences: 1,
            ..Default::default()
        });
        let moved = corrupt_leaves(&mut f.truth, 0.2, 5);
        assert_eq!(moved.len(), 26);
        for k in moved {
            assert_eq!(f.truth.depth(k).unwrap(), 3);
        }
    }

    #[test]
    fn listing_ids_unique() {
        let f = clustered_fixture(&ClusterSpec {
            sentences: 1,
            ..Default::default()
        });
        let store = listing_store(&f, 500, 2);
        let ids: HashSet<_> = store.iter().map(|l| &l.listing_id).collect();
        assert_eq!(ids.len(), 500);
        assert!(store.iter().all(|l| !l.insights.is_empty()));
    }
}
