use std::collections::HashSet;

use serde::Serialize;

use super::scorer::bounded_score;
use super::{FeatureExtractor, LinkScorer, PruningError, Result};
use crate::taxonomy::{NodeId, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PruneOptions {
    pub threshold: f64,
    /// Leave root-child edges unscored.
    pub exempt_top_level: bool,
}

impl Default for PruneOptions {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            exempt_top_level: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeScore {
    pub node: NodeId,
    pub parent: NodeId,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reattachment {
    pub node: NodeId,
    pub from: NodeId,
    pub to: NodeId,
    pub score: f64,
    /// The best available parent still scored below the threshold.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PruneReport {
    pub threshold: f64,
    pub scored: usize,
    /// Edges scored below the threshold, in node order.
    pub invalid: Vec<EdgeScore>,
    pub moves: Vec<Reattachment>,
    /// Invalid-edge children with no eligible parent; left in place.
    pub unresolvable: Vec<NodeId>,
}

/// Scores every edge, then moves each child of an invalid edge (ascending
/// node id) under the highest-scoring candidate parent.
///
/// Candidates are the nodes that currently have children, minus the root,
/// the node itself and its subtree. Ties go to the smaller id. A move whose
/// best score is below the threshold still happens and is flagged
/// `low_confidence`. Subtrees travel with their root.
pub fn prune_and_reattach(
    t: &mut Taxonomy,
    scorer: &dyn LinkScorer,
    fx: &FeatureExtractor<'_>,
    opts: &PruneOptions,
) -> Result<PruneReport> {
    if !(opts.threshold > 0.0 && opts.threshold < 1.0) {
        return Err(PruningError::InvalidThreshold(opts.threshold));
    }
    let mut report = PruneReport {
        threshold: opts.threshold,
        ..Default::default()
    };

    let max_depth = t.stats().max_depth;
    for id in t.ids().skip(1) {
        let parent = t.parent(id)?.expect("non-root node has a parent");
        if opts.exempt_top_level && parent.is_root() {
            continue;
        }
        let label = t.label(id)?;
        let f = fx.edge_features(t, label, parent, max_depth);
        let score = bounded_score(scorer, label, t.label(parent)?, &f);
        report.scored += 1;
        if score < opts.threshold {
            report.invalid.push(EdgeScore { node: id, parent, score });
        }
    }

    for k in report.invalid.iter().map(|e| e.node).collect::<Vec<_>>() {
        let max_depth = t.stats().max_depth;
        let own: HashSet<NodeId> = t.subtree(k)?.into_iter().collect();
        let label = t.label(k)?.to_owned();
        let mut best: Option<(NodeId, f64)> = None;
        for c in t.candidate_parents() {
            if c.is_root() || own.contains(&c) {
                continue;
            }
            let f = fx.edge_features(t, &label, c, max_depth);
            let s = bounded_score(scorer, &label, t.label(c)?, &f);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        let Some((to, score)) = best else {
            report.unresolvable.push(k);
            continue;
        };
        let from = t.parent(k)?.expect("non-root node has a parent");
        t.move_node(k, to)?;
        report.moves.push(Reattachment {
            node: k,
            from,
            to,
            score,
            low_confidence: score < opts.threshold,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{train_lines, EmbeddingConfig, EmbeddingModel};
    use crate::link_pruning::FeatureVector;
    use crate::taxonomy::NodeKind;

    fn tiny_model() -> EmbeddingModel {
        let lines = vec!["golf course natural light amenities lighting skylight"; 4];
        let cfg = EmbeddingConfig {
            dim: 8,
            buckets: 64,
            epochs: 1,
            min_count: 1,
            ..Default::default()
        };
        train_lines(&lines, &cfg).unwrap()
    }

    /// root -> course amenities -> {golf course -> {golf course clubhouse}},
    /// root -> lighting -> {natural light -> {golf, skylight}}
    fn golf_fixture() -> Taxonomy {
        let mut t = Taxonomy::new();
        let amen = t.add_node("course amenities", NodeId::ROOT, NodeKind::Category).unwrap();
        let light = t.add_node("lighting", NodeId::ROOT, NodeKind::Category).unwrap();
        let course = t.add_node("golf course", amen, NodeKind::Keyphrase).unwrap();
        let natural = t.add_node("natural light", light, NodeKind::Keyphrase).unwrap();
        t.add_node("golf course clubhouse", course, NodeKind::Keyphrase).unwrap();
        t.add_node("golf", natural, NodeKind::Keyphrase).unwrap();
        t.add_node("skylight", natural, NodeKind::Keyphrase).unwrap();
        t
    }

    #[test]
    fn constant_one_scorer_changes_nothing() {
        let m = tiny_model();
        let mut t = golf_fixture();
        let before = t.to_canonical_string();
        let fx = FeatureExtractor::with_taxonomy(&m, &t);
        let one = |_: &str, _: &str, _: &FeatureVector| 1.0;
        let r = prune_and_reattach(&mut t, &one, &fx, &PruneOptions::default()).unwrap();
        assert!(r.invalid.is_empty() && r.moves.is_empty());
        assert_eq!(r.scored, 5);
        assert_eq!(t.to_canonical_string(), before);
    }

    #[test]
    fn trigram_scorer_moves_golf_under_golf_course() {
        let trig = |l: &str| crate::link_pruning::char_trigrams(l);
        assert!(trig("golf").is_disjoint(&trig("natural light")));
        assert!(!trig("golf").is_disjoint(&trig("golf course")));
        assert!(trig("golf").is_disjoint(&trig("course amenities")));
        assert!(trig("golf").is_disjoint(&trig("lighting")));
        for (c, p) in [("golf course", "course amenities"), ("natural light", "lighting"), ("skylight", "natural light")] {
            assert!(!trig(c).is_disjoint(&trig(p)));
        }

        let m = tiny_model();
        let mut t = golf_fixture();
        let fx = FeatureExtractor::with_taxonomy(&m, &t);
        let scorer = |_: &str, _: &str, f: &FeatureVector| if f.trigram_jaccard > 0.0 { 1.0 } else { 0.0 };
        let r = prune_and_reattach(&mut t, &scorer, &fx, &PruneOptions::default()).unwrap();
        let golf = t.find("golf").unwrap();
        assert_eq!(t.parent(golf).unwrap(), t.find("golf course"));
        assert_eq!(r.moves.len(), 1);
        assert!(!r.moves[0].low_confidence);
        t.validate().unwrap();
    }

    #[test]
    fn low_confidence_moves_and_unresolvable() {
        let m = tiny_model();
        let mut t = golf_fixture();
        let fx = FeatureExtractor::with_taxonomy(&m, &t);
        let zero = |_: &str, _: &str, _: &FeatureVector| 0.0;
        let before = t.len();
        let r = prune_and_reattach(&mut t, &zero, &fx, &PruneOptions::default()).unwrap();
        assert!(r.moves.iter().all(|mv| mv.low_confidence));
        assert_eq!(t.len(), before);
        t.validate().unwrap();

        let mut chain = Taxonomy::new();
        let a = chain.add_node("a", NodeId::ROOT, NodeKind::Category).unwrap();
        let b = chain.add_node("b", a, NodeKind::Keyphrase).unwrap();
        let c = chain.add_node("c", b, NodeKind::Keyphrase).unwrap();
        let r = prune_and_reattach(&mut chain, &zero, &fx, &PruneOptions::default()).unwrap();
        // b can only go under a (itself excluded); c can go under a or b.
        assert_eq!(r.moves[0].to, a);
        assert_eq!(r.moves[1].node, c);
        assert_eq!(r.moves[1].to, a);
        assert!(r.unresolvable.is_empty());

        let mut flat = Taxonomy::new();
        let x = flat.add_node("x", NodeId::ROOT, NodeKind::Category).unwrap();
        flat.add_node("y", x, NodeKind::Keyphrase).unwrap();
        let r = prune_and_reattach(&mut flat, &zero, &fx, &PruneOptions::default()).unwrap();
        assert_eq!(r.moves[0].to, x);
    }

    #[test]
    fn top_level_exemption() {
        let m = tiny_model();
        let mut t = golf_fixture();
        let fx = FeatureExtractor::with_taxonomy(&m, &t);
        let zero = |_: &str, _: &str, _: &FeatureVector| 0.0;
        let opts = PruneOptions {
            exempt_top_level: false,
            ..Default::default()
        };
        let r = prune_and_reattach(&mut t, &zero, &fx, &opts).unwrap();
        assert_eq!(r.scored, 7);
        t.validate().unwrap();
    }

    #[test]
    fn bad_threshold() {
        let m = tiny_model();
        let mut t = golf_fixture();
        let fx = FeatureExtractor::new(&m);
        let one = |_: &str, _: &str, _: &FeatureVector| 1.0;
        for th in [0.0, 1.0, f64::NAN] {
            let opts = PruneOptions {
                threshold: th,
                ..Default::default()
            };
            assert!(matches!(
                prune_and_reattach(&mut t, &one, &fx, &opts),
                Err(PruningError::InvalidThreshold(_))
            ));
        }
    }
}
