use std::path::{Path, PathBuf};

use taxoforge_core::embedding::EmbeddingError;
use taxoforge_core::evaluation::EvalError;
use taxoforge_core::expansion::ExpansionError;
use taxoforge_core::link_pruning::PruningError;
use taxoforge_core::recommender::RecommendError;
use taxoforge_core::taxonomy::TaxonomyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("no node labelled {0:?}")]
    UnknownLabel(String),
    #[error("{} not found", .0.display())]
    Missing(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Pruning(#[from] PruningError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 for usage errors, 2 for everything the data caused.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            _ => 2,
        }
    }
}
