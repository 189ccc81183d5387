use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use taxoforge_core::embedding::EmbeddingModel;
use taxoforge_core::evaluation::ReferenceOntology;
use taxoforge_core::link_pruning::journal::{Journal, JournalRecord, ReviewSession};
use taxoforge_core::link_pruning::{LogisticScorer, ReviewQueue, SuggestionStatus};
use taxoforge_core::recommender::{read_listings, Listing};
use taxoforge_core::taxonomy::Taxonomy;

use crate::error::CliError;

pub const CONFIG_FILE: &str = "taxoforge.toml";

/// Workspace settings, read from `taxoforge.toml` when present. Paths are
/// relative to the workspace directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkspaceConfig {
    pub taxonomy: PathBuf,
    pub model: PathBuf,
    pub listings: PathBuf,
    pub reference: PathBuf,
    pub journal: PathBuf,
    pub scorer: PathBuf,
    pub pairs: PathBuf,
    pub alpha: f64,
    pub threshold: f64,
    pub port: u16,
}

impl Default for WorkspaceConfig {
    fn default() -> Self {
        Self {
            taxonomy: "taxonomy.json".into(),
            model: "model.emb".into(),
            listings: "listings.jsonl".into(),
            reference: "reference.tsv".into(),
            journal: "journal.jsonl".into(),
            scorer: "scorer.json".into(),
            pairs: "pairs.tsv".into(),
            alpha: taxoforge_core::expansion::DEFAULT_ALPHA,
            threshold: 0.5,
            port: 8080,
        }
    }
}

impl WorkspaceConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(CliError::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(CliError::Config(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
    pub config: WorkspaceConfig,
}

impl Workspace {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        if !root.is_dir() {
            return Err(CliError::Missing(root));
        }
        let cfg_path = root.join(CONFIG_FILE);
        let config = if cfg_path.exists() {
            let text = std::fs::read_to_string(&cfg_path).map_err(|e| CliError::io(&cfg_path, e))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", cfg_path.display())))?
        } else {
            WorkspaceConfig::default()
        };
        config.validate()?;
        Ok(Self { root, config })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn taxonomy_path(&self) -> PathBuf {
        self.path(&self.config.taxonomy)
    }

    pub fn journal_path(&self) -> PathBuf {
        self.path(&self.config.journal)
    }

    pub fn model_path(&self) -> PathBuf {
        self.path(&self.config.model)
    }

    pub fn scorer_path(&self) -> PathBuf {
        self.path(&self.config.scorer)
    }

    pub fn pairs_path(&self) -> PathBuf {
        self.path(&self.config.pairs)
    }

    fn open_file(path: &Path) -> Result<BufReader<File>, CliError> {
        match File::open(path) {
            Ok(f) => Ok(BufReader::new(f)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(CliError::Missing(path.to_path_buf())),
            Err(e) => Err(CliError::io(path, e)),
        }
    }

    /// The snapshot the journal is replayed on.
    pub fn load_base_taxonomy(&self) -> Result<Taxonomy, CliError> {
        Ok(Taxonomy::load(Self::open_file(&self.taxonomy_path())?)?)
    }

    /// Base snapshot plus replayed journal, with the journal open for
    /// appends.
    pub fn load_session(&self) -> Result<ReviewSession, CliError> {
        Ok(ReviewSession::open(self.load_base_taxonomy()?, self.journal_path())?)
    }

    pub fn load_model(&self) -> Result<EmbeddingModel, CliError> {
        Ok(EmbeddingModel::load(Self::open_file(&self.model_path())?)?)
    }

    pub fn load_model_if_present(&self) -> Result<Option<EmbeddingModel>, CliError> {
        if self.model_path().exists() {
            self.load_model().map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn load_scorer(&self) -> Result<LogisticScorer, CliError> {
        Ok(LogisticScorer::load(Self::open_file(&self.scorer_path())?)?)
    }

    pub fn load_scorer_if_present(&self) -> Result<Option<LogisticScorer>, CliError> {
        if self.scorer_path().exists() {
            self.load_scorer().map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn load_listings(&self) -> Result<Vec<Listing>, CliError> {
        Ok(read_listings(Self::open_file(&self.path(&self.config.listings))?)?)
    }

    pub fn load_listings_if_present(&self) -> Result<Vec<Listing>, CliError> {
        if self.path(&self.config.listings).exists() {
            self.load_listings()
        } else {
            Ok(Vec::new())
        }
    }

    pub fn load_reference(&self) -> Result<ReferenceOntology, CliError> {
        Ok(ReferenceOntology::read(Self::open_file(&self.path(&self.config.reference))?)?)
    }

    /// Writes `t` as the new base snapshot and starts a new journal holding
    /// only the still-pending suggestions. A non-empty old journal is kept
    /// as `<journal>.<n>`; journals are never rewritten in place.
    pub fn commit(&self, t: &Taxonomy, queue: &ReviewQueue) -> Result<(), CliError> {
        let journal = self.journal_path();
        if std::fs::metadata(&journal).is_ok_and(|m| m.len() > 0) {
            let archive = (1..)
                .map(|n| PathBuf::from(format!("{}.{n}", journal.display())))
                .find(|p| !p.exists())
                .expect("unbounded range");
            std::fs::hard_link(&journal, &archive).map_err(|e| CliError::io(&archive, e))?;
        }
        write_atomic(&self.taxonomy_path(), |w| Ok(t.save(w)?))?;
        write_atomic(&journal, |w| {
            for s in queue.with_status(SuggestionStatus::Pending) {
                serde_json::to_writer(&mut *w, &JournalRecord::suggested(s)).map_err(std::io::Error::from)?;
                w.write_all(b"\n")?;
            }
            Ok(())
        })
    }

    /// Starts a fresh history: new base snapshot, empty journal.
    pub fn reset(&self, t: &Taxonomy) -> Result<(), CliError> {
        self.commit(t, &ReviewQueue::new())?;
        // Make sure the file exists even when nothing is pending.
        Journal::open(self.journal_path())?;
        Ok(())
    }
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<&mut tempfile::NamedTempFile>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    {
        let mut w = BufWriter::new(&mut tmp);
        f(&mut w)?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
