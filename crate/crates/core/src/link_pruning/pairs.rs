use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{PruningError, Result};
use crate::taxonomy::{NodeId, Taxonomy};
use crate::text::is_normalized;

/// A labeled (child, parent) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinkSample {
    pub child: String,
    pub parent: String,
    pub valid: bool,
}

impl LinkSample {
    pub fn new(child: impl Into<String>, parent: impl Into<String>, valid: bool) -> Self {
        Self {
            child: child.into(),
            parent: parent.into(),
            valid,
        }
    }

    /// The pair as a single classifier input.
    pub fn joined(&self) -> String {
        format!("{} [SEP] {}", self.child, self.parent)
    }
}

/// A node that received fewer negatives than requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shortfall {
    pub node: NodeId,
    pub wanted: usize,
    pub got: usize,
}

#[derive(Debug, Clone, Default)]
pub struct PairSet {
    pub samples: Vec<LinkSample>,
    pub shortfalls: Vec<Shortfall>,
}

impl PairSet {
    pub fn positives(&self) -> usize {
        self.samples.iter().filter(|s| s.valid).count()
    }

    pub fn negatives(&self) -> usize {
        self.samples.len() - self.positives()
    }
}

/// One positive per non-root node plus up to `negatives_per_positive`
/// negatives whose parent is a candidate parent off the node's root path and
/// outside its subtree. Nodes are visited in id order; each node's positive
/// is followed by its negatives.
pub fn generate_pairs(t: &Taxonomy, negatives_per_positive: usize, seed: u64) -> Result<PairSet> {
    let candidates = t.candidate_parents();
    if candidates.len() < 2 {
        return Err(PruningError::TooFewCandidateParents(candidates.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PairSet::default();
    for id in t.ids().skip(1) {
        let label = t.label(id)?;
        let parent = t.parent(id)?.expect("non-root node has a parent");
        out.samples.push(LinkSample::new(label, t.label(parent)?, true));

        let mut blocked: HashSet<NodeId> = t.path_to_root(id)?.into_iter().collect();
        blocked.extend(t.subtree(id)?);
        let eligible: Vec<NodeId> = candidates.iter().copied().filter(|c| !blocked.contains(c)).collect();
        let take = negatives_per_positive.min(eligible.len());
        for i in rand::seq::index::sample(&mut rng, eligible.len(), take) {
            out.samples.push(LinkSample::new(label, t.label(eligible[i])?, false));
        }
        if take < negatives_per_positive {
            out.shortfalls.push(Shortfall {
                node: id,
                wanted: negatives_per_positive,
                got: take,
            });
        }
    }
    Ok(out)
}

pub fn write_pairs<W: Write>(mut w: W, samples: &[LinkSample]) -> std::io::Result<()> {
    for s in samples {
        writeln!(w, "{}\t{}\t{}", s.child, s.parent, u8::from(s.valid))?;
    }
    w.flush()
}

/// Reads `child<TAB>parent<TAB>{0|1}` lines. Labels must already be
/// normalized and distinct.
pub fn read_pairs<R: BufRead>(r: R) -> Result<Vec<LinkSample>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| PruningError::Malformed {
            line: i + 1,
            msg: msg.to_owned(),
        };
        let mut parts = line.split('\t');
        let (Some(child), Some(parent), Some(flag), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(bad("expected child<TAB>parent<TAB>label"));
        };
        let valid = match flag {
            "1" => true,
            "0" => false,
            _ => return Err(bad("label must be 0 or 1")),
        };
        if child.is_empty() || parent.is_empty() || !is_normalized(child) || !is_normalized(parent) {
            return Err(bad("labels must be normalized"));
        }
        if child == parent {
            return Err(bad("child equals parent"));
        }
        out.push(LinkSample::new(child, parent, valid));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::NodeKind;

    fn two_branches() -> Taxonomy {
        let mut t = Taxonomy::new();
        let a = t.add_node("a", NodeId::ROOT, NodeKind::Category).unwrap();
        let b = t.add_node("b", NodeId::ROOT, NodeKind::Category).unwrap();
        t.add_node("a1", a, NodeKind::Keyphrase).unwrap();
        t.add_node("b1", b, NodeKind::Keyphrase).unwrap();
        t
    }

    #[test]
    fn chain_has_no_negatives() {
        let mut t = Taxonomy::new();
        let a = t.add_node("a", NodeId::ROOT, NodeKind::Category).unwrap();
        t.add_node("a1", a, NodeKind::Keyphrase).unwrap();
        let set = generate_pairs(&t, 1, 0).unwrap();
        assert_eq!(
            set.samples,
            vec![LinkSample::new("a", "root", true), LinkSample::new("a1", "a", true)]
        );
        assert_eq!(set.shortfalls.len(), 2);
        assert_eq!(set.shortfalls[1], Shortfall { node: NodeId(2), wanted: 1, got: 0 });
    }

    #[test]
    fn only_eligible_negative_is_other_branch() {
        let set = generate_pairs(&two_branches(), 1, 3).unwrap();
        assert!(set.samples.contains(&LinkSample::new("a1", "b", false)));
        assert!(set.samples.contains(&LinkSample::new("b1", "a", false)));
        assert_eq!(set.positives(), 4);
        // "a" and "b" may only be paired with each other.
        assert!(set.samples.contains(&LinkSample::new("a", "b", false)));
    }

    #[test]
    fn too_few_candidates() {
        let mut t = Taxonomy::new();
        assert!(matches!(generate_pairs(&t, 1, 0), Err(PruningError::TooFewCandidateParents(0))));
        t.add_node("a", NodeId::ROOT, NodeKind::Category).unwrap();
        assert!(matches!(generate_pairs(&t, 1, 0), Err(PruningError::TooFewCandidateParents(1))));
    }

    #[test]
    fn deterministic_per_seed() {
        let t = two_branches();
        let a = generate_pairs(&t, 2, 11).unwrap();
        let b = generate_pairs(&t, 2, 11).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn pair_file_round_trip() {
        let samples = generate_pairs(&two_branches(), 1, 1).unwrap().samples;
        let mut buf = Vec::new();
        write_pairs(&mut buf, &samples).unwrap();
        assert_eq!(read_pairs(buf.as_slice()).unwrap(), samples);
        assert_eq!(samples[0].joined(), "a [SEP] root");
    }

    #[test]
    fn pair_file_errors() {
        for (text, line) in [
            ("a\tb\n", 1),
            ("a\tb\t1\nx\ty\t2\n", 2),
            ("A\tb\t1\n", 1),
            ("a\ta\t0\n", 1),
            ("a\tb\t1\textra\n", 1),
        ] {
            match read_pairs(text.as_bytes()) {
                Err(PruningError::Malformed { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
