use std::collections::{BTreeMap, HashSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::scorer::bounded_score;
use super::{FeatureExtractor, LinkScorer, PruningError, Result};
use crate::taxonomy::{NodeId, NodeKind, Taxonomy};
use crate::text::normalize_phrase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuggestionId(pub u64);

impl fmt::Display for SuggestionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuggestionStatus {
    Pending,
    Approved,
    Rejected,
}

impl SuggestionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pending => "pending",
            Self::Approved => "approved",
            Self::Rejected => "rejected",
        }
    }
}

impl fmt::Display for SuggestionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Approve,
    Reject,
}

/// A scored (phrase, parent) pair before it enters the review queue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeProposal {
    pub phrase: String,
    pub parent: NodeId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSuggestion {
    pub id: SuggestionId,
    pub child_label: String,
    pub proposed_parent: NodeId,
    pub score: f64,
    pub status: SuggestionStatus,
    pub created_at: DateTime<Utc>,
    pub decided_at: Option<DateTime<Utc>>,
    pub reviewer_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPhrase {
    pub phrase: String,
    pub note: &'static str,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SuggestOutcome {
    pub proposals: Vec<EdgeProposal>,
    pub skipped: Vec<SkippedPhrase>,
}

/// Scores each new phrase against every candidate parent except the root
/// and keeps the `top_k` best, ordered by score descending then node id.
pub fn suggest_edges<S: AsRef<str>>(
    t: &Taxonomy,
    scorer: &dyn LinkScorer,
    fx: &FeatureExtractor<'_>,
    phrases: &[S],
    top_k: usize,
) -> SuggestOutcome {
    let max_depth = t.stats().max_depth;
    let candidates: Vec<NodeId> = t.candidate_parents().into_iter().filter(|c| !c.is_root()).collect();
    let mut seen = HashSet::new();
    let mut out = SuggestOutcome::default();
    for raw in phrases {
        let phrase = normalize_phrase(raw.as_ref());
        let note = if phrase.is_empty() {
            Some("empty after normalization")
        } else if t.find(&phrase).is_some() {
            Some("already a node")
        } else if !seen.insert(phrase.clone()) {
            Some("repeated in input")
        } else {
            None
        };
        if let Some(note) = note {
            out.skipped.push(SkippedPhrase { phrase, note });
            continue;
        }
        let mut scored: Vec<(NodeId, f64)> = candidates
            .iter()
            .map(|&c| {
                let f = fx.edge_features(t, &phrase, c, max_depth);
                let label = t.label(c).expect("candidate is a node");
                (c, bounded_score(scorer, &phrase, label, &f))
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out.proposals.extend(scored.into_iter().take(top_k).map(|(parent, score)| EdgeProposal {
            phrase: phrase.clone(),
            parent,
            score,
        }));
    }
    out
}

/// Checks that `decision` can be applied to `s` without touching anything.
pub fn check_decision(t: &Taxonomy, s: &EdgeSuggestion, decision: Decision) -> Result<()> {
    if s.status != SuggestionStatus::Pending {
        return Err(PruningError::AlreadyDecided {
            id: s.id,
            status: s.status,
        });
    }
    if decision == Decision::Reject {
        return Ok(());
    }
    let expired = |reason: &str| PruningError::Expired {
        id: s.id,
        reason: reason.to_owned(),
    };
    if !t.contains(s.proposed_parent) {
        return Err(expired("proposed parent no longer exists"));
    }
    if let Some(node) = t.find(&s.child_label) {
        if node.is_root() || t.is_in_subtree(s.proposed_parent, node) {
            return Err(expired("proposed parent now lies under the phrase"));
        }
    }
    Ok(())
}

/// Applies a reviewer decision. Approval adds the phrase under the proposed
/// parent, or moves it there if it is already a node. Returns the affected
/// node on approval.
pub fn apply_decision(
    t: &mut Taxonomy,
    s: &mut EdgeSuggestion,
    decision: Decision,
    now: DateTime<Utc>,
    note: Option<String>,
) -> Result<Option<NodeId>> {
    check_decision(t, s, decision)?;
    let node = match decision {
        Decision::Reject => None,
        Decision::Approve => Some(match t.find(&s.child_label) {
            Some(n) => {
                t.move_node(n, s.proposed_parent)?;
                n
            }
            None => t.add_node(&s.child_label, s.proposed_parent, NodeKind::Keyphrase)?,
        }),
    };
    s.status = match decision {
        Decision::Approve => SuggestionStatus::Approved,
        Decision::Reject => SuggestionStatus::Rejected,
    };
    s.decided_at = Some(now);
    s.reviewer_note = note;
    Ok(node)
}

/// Suggestions keyed by id. Ids are assigned in increasing order and never
/// reused.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReviewQueue {
    items: BTreeMap<SuggestionId, EdgeSuggestion>,
    next_id: u64,
}

impl ReviewQueue {
    pub fn new() -> Self {
        Self {
            items: BTreeMap::new(),
            next_id: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The id the next enqueued proposal will get.
    pub fn next_id(&self) -> SuggestionId {
        SuggestionId(self.next_id.max(1))
    }

    /// Builds the pending suggestion for `p` without enqueueing it.
    pub fn draft(&self, p: &EdgeProposal, now: DateTime<Utc>) -> EdgeSuggestion {
        EdgeSuggestion {
            id: self.next_id(),
            child_label: p.phrase.clone(),
            proposed_parent: p.parent,
            score: p.score,
            status: SuggestionStatus::Pending,
            created_at: now,
            decided_at: None,
            reviewer_note: None,
        }
    }

    pub fn enqueue(&mut self, p: &EdgeProposal, now: DateTime<Utc>) -> SuggestionId {
        let s = self.draft(p, now);
        let id = s.id;
        self.insert(s);
        id
    }

    /// Inserts a suggestion under its own id, replacing any previous one.
    pub fn insert(&mut self, s: EdgeSuggestion) {
        self.next_id = self.next_id.max(s.id.0 + 1);
        self.items.insert(s.id, s);
    }

    pub fn get(&self, id: SuggestionId) -> Option<&EdgeSuggestion> {
        self.items.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &EdgeSuggestion> + '_ {
        self.items.values()
    }

    pub fn with_status(&self, status: SuggestionStatus) -> impl Iterator<Item = &EdgeSuggestion> + '_ {
        self.items.values().filter(move |s| s.status == status)
    }

    pub fn check(&self, t: &Taxonomy, id: SuggestionId, decision: Decision) -> Result<&EdgeSuggestion> {
        let s = self.items.get(&id).ok_or(PruningError::UnknownSuggestion(id))?;
        check_decision(t, s, decision)?;
        Ok(s)
    }

    pub fn decide(
        &mut self,
        t: &mut Taxonomy,
        id: SuggestionId,
        decision: Decision,
        now: DateTime<Utc>,
        note: Option<String>,
    ) -> Result<Option<NodeId>> {
        let s = self.items.get_mut(&id).ok_or(PruningError::UnknownSuggestion(id))?;
        apply_decision(t, s, decision, now, note)
    }

    /// Drops decided suggestions; the id counter is kept.
    pub fn retain_pending(&mut self) {
        self.items.retain(|_, s| s.status == SuggestionStatus::Pending);
    }
}
