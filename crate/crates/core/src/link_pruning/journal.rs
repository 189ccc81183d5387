//! Append-only JSON-lines journal of review events, and a session type that
//! writes each event before applying it.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Decision, EdgeProposal, EdgeSuggestion, PruningError, Result, ReviewQueue, SuggestionId, SuggestionStatus};
use crate::taxonomy::{NodeId, Taxonomy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase", deny_unknown_fields)]
pub enum JournalRecord {
    Suggested {
        id: SuggestionId,
        phrase: String,
        parent: NodeId,
        score: f64,
        ts: DateTime<Utc>,
    },
    Approved {
        id: SuggestionId,
        phrase: String,
        parent: NodeId,
        score: f64,
        ts: DateTime<Utc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    Rejected {
        id: SuggestionId,
        phrase: String,
        parent: NodeId,
        score: f64,
        ts: DateTime<Utc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
}

impl JournalRecord {
    pub fn suggested(s: &EdgeSuggestion) -> Self {
        Self::Suggested {
            id: s.id,
            phrase: s.child_label.clone(),
            parent: s.proposed_parent,
            score: s.score,
            ts: s.created_at,
        }
    }

    pub fn decided(s: &EdgeSuggestion, decision: Decision, ts: DateTime<Utc>, note: Option<String>) -> Self {
        let (id, phrase, parent, score) = (s.id, s.child_label.clone(), s.proposed_parent, s.score);
        match decision {
            Decision::Approve => Self::Approved { id, phrase, parent, score, ts, note },
            Decision::Reject => Self::Rejected { id, phrase, parent, score, ts, note },
        }
    }

    pub fn id(&self) -> SuggestionId {
        match self {
            Self::Suggested { id, .. } | Self::Approved { id, .. } | Self::Rejected { id, .. } => *id,
        }
    }
}

/// Parses journal lines. A final line without a newline that fails to parse
/// is treated as a torn write and ignored; any other bad line is an error.
pub fn read_journal<R: Read>(r: R) -> Result<Vec<JournalRecord>> {
    let mut out = Vec::new();
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    let mut n = 0;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        n += 1;
        let complete = line.ends_with('\n');
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line.trim_end()) {
            Ok(rec) => out.push(rec),
            Err(_) if !complete => break,
            Err(e) => {
                return Err(PruningError::Malformed {
                    line: n,
                    msg: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// Rebuilds the taxonomy and queue by applying `records` to `base`.
pub fn replay(base: Taxonomy, records: &[JournalRecord]) -> Result<(Taxonomy, ReviewQueue)> {
    let mut t = base;
    let mut q = ReviewQueue::new();
    for rec in records {
        match rec {
            JournalRecord::Suggested { id, phrase, parent, score, ts } => q.insert(EdgeSuggestion {
                id: *id,
                child_label: phrase.clone(),
                proposed_parent: *parent,
                score: *score,
                status: SuggestionStatus::Pending,
                created_at: *ts,
                decided_at: None,
                reviewer_note: None,
            }),
            JournalRecord::Approved { id, ts, note, .. } => {
                q.decide(&mut t, *id, Decision::Approve, *ts, note.clone())?;
            }
            JournalRecord::Rejected { id, ts, note, .. } => {
                q.decide(&mut t, *id, Decision::Reject, *ts, note.clone())?;
            }
        }
    }
    Ok((t, q))
}

/// An open journal file in append mode.
#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Opens or creates the journal, cutting off a torn final line.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;
        if !text.is_empty() && !text.ends_with('\n') {
            let keep = text.rfind('\n').map_or(0, |i| i + 1);
            let tail = &text[keep..];
            if serde_json::from_str::<JournalRecord>(tail).is_ok() {
                file.write_all(b"\n")?;
            } else {
                file.set_len(keep as u64)?;
                file.seek(SeekFrom::End(0))?;
            }
        }
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record and syncs it to disk.
    pub fn append(&mut self, rec: &JournalRecord) -> Result<()> {
        let mut line = serde_json::to_string(rec)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        Ok(())
    }

    pub fn read_all(&self) -> Result<Vec<JournalRecord>> {
        read_journal(File::open(&self.path)?)
    }
}

/// Taxonomy plus review queue, with every accepted event journaled before
/// it is applied.
#[derive(Debug)]
pub struct ReviewSession {
    taxonomy: Taxonomy,
    queue: ReviewQueue,
    journal: Option<Journal>,
}

impl ReviewSession {
    pub fn new(taxonomy: Taxonomy, queue: ReviewQueue, journal: Option<Journal>) -> Self {
        Self { taxonomy, queue, journal }
    }

    /// Replays the journal at `path` on top of `base` and keeps it open.
    pub fn open(base: Taxonomy, path: impl AsRef<Path>) -> Result<Self> {
        let journal = Journal::open(path)?;
        let (taxonomy, queue) = replay(base, &journal.read_all()?)?;
        Ok(Self::new(taxonomy, queue, Some(journal)))
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn queue(&self) -> &ReviewQueue {
        &self.queue
    }

    pub fn into_parts(self) -> (Taxonomy, ReviewQueue) {
        (self.taxonomy, self.queue)
    }

    fn log(&mut self, rec: &JournalRecord) -> Result<()> {
        match &mut self.journal {
            Some(j) => j.append(rec),
            None => Ok(()),
        }
    }

    pub fn submit(&mut self, proposals: &[EdgeProposal], now: DateTime<Utc>) -> Result<Vec<SuggestionId>> {
        let mut ids = Vec::with_capacity(proposals.len());
        for p in proposals {
            if !self.taxonomy.contains(p.parent) {
                return Err(PruningError::UnknownParent(p.parent));
            }
            if p.phrase.is_empty() {
                return Err(PruningError::EmptyPhrase(p.phrase.clone()));
            }
            let s = self.queue.draft(p, now);
            self.log(&JournalRecord::suggested(&s))?;
            ids.push(s.id);
            self.queue.insert(s);
        }
        Ok(ids)
    }

    pub fn decide(
        &mut self,
        id: SuggestionId,
        decision: Decision,
        now: DateTime<Utc>,
        note: Option<String>,
    ) -> Result<Option<NodeId>> {
        let rec = JournalRecord::decided(self.queue.check(&self.taxonomy, id, decision)?, decision, now, note.clone());
        self.log(&rec)?;
        self.queue.decide(&mut self.taxonomy, id, decision, now, note)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::NodeKind;

    fn base() -> Taxonomy {
        let mut t = Taxonomy::new();
        let k = t.add_node("kitchen", NodeId::ROOT, NodeKind::Category).unwrap();
        t.add_node("sink", k, NodeKind::Keyphrase).unwrap();
        t
    }

    fn ts(s: i64) -> DateTime<Utc> {
        DateTime::from_timestamp(1_750_000_000 + s, 250_000_000).unwrap()
    }

    fn proposal(phrase: &str, parent: u32) -> EdgeProposal {
        EdgeProposal {
            phrase: phrase.into(),
            parent: NodeId(parent),
            score: 0.1 + f64::from(parent) / 3.0,
        }
    }

    #[test]
    fn record_json_shape() {
        let rec = JournalRecord::Rejected {
            id: SuggestionId(4),
            phrase: "pool".into(),
            parent: NodeId(2),
            score: 0.25,
            ts: ts(0),
            note: None,
        };
        let s = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            s,
            r#"{"event":"rejected","id":4,"phrase":"pool","parent":2,"score":0.25,"ts":"2025-06-15T15:06:40.250Z"}"#
        );
        assert_eq!(serde_json::from_str::<JournalRecord>(&s).unwrap(), rec);
    }

    #[test]
    fn replay_reconstructs_session() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("journal.jsonl");
        let mut live = ReviewSession::open(base(), &path).unwrap();
        let ids = live
            .submit(&[proposal("island", 1), proposal("faucet", 2), proposal("pantry", 1)], ts(0))
            .unwrap();
        live.decide(ids[0], Decision::Approve, ts(1), Some("ok".into())).unwrap();
        live.decide(ids[1], Decision::Reject, ts(2), None).unwrap();
        let later = live.submit(&[proposal("disposal", 2)], ts(3)).unwrap();
        live.decide(later[0], Decision::Approve, ts(4), None).unwrap();
        assert!(live.decide(ids[0], Decision::Reject, ts(5), None).is_err());

        let reopened = ReviewSession::open(base(), &path).unwrap();
        assert_eq!(reopened.taxonomy().to_canonical_string(), live.taxonomy().to_canonical_string());
        assert_eq!(reopened.queue(), live.queue());
        assert_eq!(reopened.journal.as_ref().unwrap().read_all().unwrap().len(), 7);
    }

    #[test]
    fn rejected_events_are_not_journaled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        let mut s = ReviewSession::open(base(), &path).unwrap();
        assert!(matches!(
            s.submit(&[proposal("x", 9)], ts(0)),
            Err(PruningError::UnknownParent(_))
        ));
        let id = s.submit(&[proposal("x", 1)], ts(0)).unwrap()[0];
        s.decide(id, Decision::Reject, ts(1), None).unwrap();
        assert!(s.decide(id, Decision::Approve, ts(2), None).is_err());
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        let mut s = ReviewSession::open(base(), &path).unwrap();
        s.submit(&[proposal("x", 1)], ts(0)).unwrap();
        drop(s);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(br#"{"event":"approved","id":1,"phr"#).unwrap();
        drop(f);

        assert_eq!(read_journal(File::open(&path).unwrap()).unwrap().len(), 1);
        let mut s = ReviewSession::open(base(), &path).unwrap();
        assert_eq!(s.queue().len(), 1);
        s.decide(SuggestionId(1), Decision::Approve, ts(1), None).unwrap();
        let again = ReviewSession::open(base(), &path).unwrap();
        assert_eq!(again.taxonomy().len(), 4);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let text = "{\"event\":\"nope\"}\n{\"event\":\"rejected\"}\n";
        assert!(matches!(read_journal(text.as_bytes()), Err(PruningError::Malformed { line: 1, .. })));
    }
}
