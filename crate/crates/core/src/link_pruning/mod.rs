//! Link validity scoring, pruning with argmax reattachment, and the
//! suggestion review workflow.

mod features;
pub mod journal;
mod pairs;
mod prune;
mod review;
mod scorer;

use thiserror::Error;

use crate::taxonomy::{NodeId, TaxonomyError};

pub use self::features::{char_trigrams, FeatureExtractor, FeatureVector};
pub use self::pairs::{generate_pairs, read_pairs, write_pairs, LinkSample, PairSet, Shortfall};
pub use self::prune::{prune_and_reattach, EdgeScore, PruneOptions, PruneReport, Reattachment};
pub use self::review::{
    apply_decision, check_decision, suggest_edges, Decision, EdgeProposal, EdgeSuggestion, ReviewQueue, SkippedPhrase,
    SuggestOutcome,
    SuggestionId, SuggestionStatus,
};
pub use self::scorer::{fit_reference_scorer, LinkScorer, LogisticScorer, ScorerTraining, TrainedScorer};

#[derive(Debug, Error)]
pub enum PruningError {
    #[error("need at least 2 candidate parents, found {0}")]
    TooFewCandidateParents(usize),
    #[error("training samples must contain both classes")]
    SingleClass,
    #[error("threshold must lie strictly between 0 and 1, got {0}")]
    InvalidThreshold(f64),
    #[error("unknown suggestion {0}")]
    UnknownSuggestion(SuggestionId),
    #[error("suggestion {id} was already {status}")]
    AlreadyDecided { id: SuggestionId, status: SuggestionStatus },
    #[error("suggestion {id} expired: {reason}")]
    Expired { id: SuggestionId, reason: String },
    #[error("phrase {0:?} is empty after normalization")]
    EmptyPhrase(String),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("proposed parent {0} does not exist")]
    UnknownParent(NodeId),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PruningError> = std::result::Result<T, E>;
