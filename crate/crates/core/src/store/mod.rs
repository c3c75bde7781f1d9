//! Event-sourced persistence: the log is the ground truth and every
//! condition is a deterministic replay of it over the imported base state.

pub mod lease;
pub mod log;
pub mod records;
pub mod workspace;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::corpus::{Document, Sentence};
use crate::framebank::FrameBank;
use crate::metrics::report::{completeness_table, diversity_table, edit_table, similarity_table, time_table};
use crate::metrics::{Condition, ConditionError, ConditionLabel, MetricsError, ReportTable};
use crate::preannot::{materialize_conditions, resolve_all, BatchResolution, ParserHypothesis};
use crate::review::{apply_edit, create_annotation_set, AnnotationSet, AsId, EditAction, EditEvent, ReviewError};

pub use lease::{Lease, LeaseTable};
pub use log::{EventLog, LogRecord};
pub use records::{AnnotationRecord, RecordError};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no valid lease on document {0}")]
    LeaseInvalid(String),
    #[error("document {doc_id} is leased to {holder}")]
    LeaseHeld { doc_id: String, holder: String },
    #[error("validation failed: {0}")]
    Validation(#[from] ReviewError),
    #[error("unknown annotation set {0}")]
    UnknownAs(AsId),
    #[error("unknown document {0}")]
    UnknownDocument(String),
    #[error("unknown sentence {0}")]
    UnknownSentence(String),
    #[error(transparent)]
    ReadOnly(#[from] ConditionError),
    #[error("corrupt event log at line {line}: {message}")]
    CorruptLog { line: usize, message: String },
    #[error("replay position {upto} is beyond the end of the log ({len})")]
    BeyondLog { upto: u64, len: u64 },
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("invalid annotation record: {0}")]
    Record(#[from] RecordError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::LeaseInvalid(_) => "LEASE_INVALID",
            StoreError::LeaseHeld { .. } => "LEASE_HELD",
            StoreError::Validation(_) => "VALIDATION_FAILED",
            StoreError::UnknownAs(_) => "UNKNOWN_AS",
            StoreError::UnknownDocument(_) => "UNKNOWN_DOCUMENT",
            StoreError::UnknownSentence(_) => "UNKNOWN_SENTENCE",
            StoreError::ReadOnly(_) => "READ_ONLY_CONDITION",
            StoreError::CorruptLog { .. } => "CORRUPT_LOG",
            StoreError::BeyondLog { .. } => "BEYOND_LOG",
            StoreError::MissingData(_) => "MISSING_DATA",
            StoreError::Record(_) => "SCHEMA",
            StoreError::Io(_) => "IO",
        }
    }

    /// The review-module code carried by a `VALIDATION_FAILED` error.
    pub fn detail_code(&self) -> Option<&'static str> {
        match self {
            StoreError::Validation(e) => Some(e.code()),
            _ => None,
        }
    }
}

/// Corpus documents with a sentence index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusIndex {
    documents: Vec<Document>,
    sentences: HashMap<String, (usize, usize)>,
}

impl CorpusIndex {
    pub fn new(documents: Vec<Document>) -> CorpusIndex {
        let mut sentences = HashMap::new();
        for (d, doc) in documents.iter().enumerate() {
            for (s, sentence) in doc.sentences.iter().enumerate() {
                sentences.insert(sentence.id.clone(), (d, s));
            }
        }
        CorpusIndex { documents, sentences }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn sentence(&self, id: &str) -> Option<&Sentence> {
        let &(d, s) = self.sentences.get(id)?;
        Some(&self.documents[d].sentences[s])
    }
}

/// The three conditions as of one log position.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub corpus: Arc<CorpusIndex>,
    pub bank: Arc<FrameBank>,
    pub human: Arc<Condition>,
    pub machine: Arc<Condition>,
    pub machine_human: Arc<Condition>,
    /// Machine+human seed set id to the machine set it was copied from.
    pub cross_ref: Arc<BTreeMap<AsId, AsId>>,
    pub log_position: u64,
}

impl Default for Snapshot {
    fn default() -> Self {
        Snapshot {
            corpus: Arc::default(),
            bank: Arc::default(),
            human: Arc::new(Condition::new(ConditionLabel::Human).freeze()),
            machine: Arc::new(Condition::new(ConditionLabel::Machine).freeze()),
            machine_human: Arc::new(Condition::new(ConditionLabel::MachineHuman)),
            cross_ref: Arc::default(),
            log_position: 0,
        }
    }
}

impl Snapshot {
    /// Resolves hypotheses against a pristine bank and attaches the human
    /// condition. Set ids: machine `1..=n`, seed `n+1..=2n`, human after.
    pub fn build(
        bank: FrameBank,
        documents: Vec<Document>,
        hypotheses: &[ParserHypothesis],
        human: &[AnnotationRecord],
    ) -> Result<(Snapshot, BatchResolution), StoreError> {
        let mut bank = bank;
        let mut resolution = resolve_all(hypotheses, &documents, &mut bank, 1);
        let materialized = materialize_conditions(std::mem::take(&mut resolution.sets));
        resolution.sets = materialized.machine.iter().cloned().collect();
        let next_id = materialized
            .machine_human_seed
            .max_id()
            .map_or(1, |id| id.0 + 1);
        let human = records::human_condition(human, &documents, &mut bank, next_id)?.freeze();
        let snapshot = Snapshot {
            corpus: Arc::new(CorpusIndex::new(documents)),
            bank: Arc::new(bank),
            human: Arc::new(human),
            machine: Arc::new(materialized.machine),
            machine_human: Arc::new(materialized.machine_human_seed),
            cross_ref: Arc::new(materialized.cross_ref),
            log_position: 0,
        };
        Ok((snapshot, resolution))
    }

    pub fn condition(&self, label: ConditionLabel) -> &Condition {
        match label {
            ConditionLabel::Human => &self.human,
            ConditionLabel::Machine => &self.machine,
            ConditionLabel::MachineHuman => &self.machine_human,
        }
    }

    /// Finds a set in any condition.
    pub fn find(&self, id: AsId) -> Option<(ConditionLabel, &AnnotationSet)> {
        ConditionLabel::ALL
            .into_iter()
            .find_map(|label| self.condition(label).get(id).map(|s| (label, s)))
    }

    pub fn next_as_id(&self) -> AsId {
        let max = ConditionLabel::ALL
            .into_iter()
            .filter_map(|l| self.condition(l).max_id())
            .max()
            .map_or(0, |id| id.0);
        AsId(max + 1)
    }

    /// Document an event writes to.
    pub fn document_of(&self, event: &EditEvent) -> Result<String, StoreError> {
        match &event.action {
            EditAction::Create { document_id, .. } => Ok(document_id.clone()),
            _ => match self.find(event.as_id) {
                Some((_, set)) => Ok(set.document_id.clone()),
                None => Err(StoreError::UnknownAs(event.as_id)),
            },
        }
    }

    /// Applies the next event of the log. Only the machine+human condition
    /// is writable. On error `self` is unchanged.
    pub fn apply(&mut self, event: &EditEvent) -> Result<(), StoreError> {
        if event.seq != self.log_position + 1 {
            return Err(StoreError::CorruptLog {
                line: event.seq as usize,
                message: format!("expected sequence {}, found {}", self.log_position + 1, event.seq),
            });
        }
        for label in [ConditionLabel::Machine, ConditionLabel::Human] {
            if self.condition(label).contains(event.as_id) {
                return Err(ConditionError::Frozen(label).into());
            }
        }
        self.check_spans(event)?;

        // Review functions validate before touching the bank, so an error
        // here leaves it as it was.
        let updated = match &event.action {
            EditAction::Create { .. } => {
                if self.machine_human.contains(event.as_id) {
                    return Err(ReviewError::CreateNotFirst.into());
                }
                create_annotation_set(event, Arc::make_mut(&mut self.bank))?
            }
            _ => {
                let set = self
                    .machine_human
                    .get(event.as_id)
                    .ok_or(StoreError::UnknownAs(event.as_id))?;
                apply_edit(set, event, Arc::make_mut(&mut self.bank))?
            }
        };
        Arc::make_mut(&mut self.machine_human).put(updated)?;
        self.log_position = event.seq;
        Ok(())
    }

    /// Spans must lie inside the sentence; review-level checks cannot see
    /// the corpus.
    fn check_spans(&self, event: &EditEvent) -> Result<(), StoreError> {
        let (sentence_id, span) = match &event.action {
            EditAction::Create {
                document_id,
                sentence_id,
                target,
                ..
            } => {
                let sentence = self
                    .corpus
                    .sentence(sentence_id)
                    .ok_or_else(|| StoreError::UnknownSentence(sentence_id.clone()))?;
                if &sentence.document_id != document_id {
                    return Err(StoreError::UnknownSentence(sentence_id.clone()));
                }
                (sentence_id.clone(), *target)
            }
            EditAction::AddFe { span, .. } => match self.machine_human.get(event.as_id) {
                Some(set) => (set.sentence_id.clone(), *span),
                None => return Ok(()),
            },
            _ => return Ok(()),
        };
        let sentence = self
            .corpus
            .sentence(&sentence_id)
            .ok_or(StoreError::UnknownSentence(sentence_id))?;
        if span.is_empty() || !span.is_within(sentence.len()) {
            return Err(ReviewError::BadSpan(span).into());
        }
        Ok(())
    }

    /// Builds report table `n` (1 to 5) over the given conditions. Tables 4
    /// and 5 always compare the fixed conditions they are defined on.
    pub fn report(&self, n: u8, conditions: &[ConditionLabel]) -> Result<ReportTable, ReportError> {
        let selected: Vec<&Condition> = conditions.iter().map(|&l| self.condition(l)).collect();
        let docs = self.corpus.documents();
        let table = match n {
            1 => diversity_table(&selected, docs)?,
            2 => similarity_table(&selected, docs)?,
            3 => completeness_table(&selected, docs, &self.bank)?,
            4 => time_table(&self.human, &self.machine_human, docs)?,
            5 => edit_table(&self.machine_human, docs)?,
            _ => return Err(ReportError::UnknownTable(n)),
        };
        Ok(table)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no table {0}; tables are numbered 1 to 5")]
    UnknownTable(u8),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl ReportError {
    pub fn code(&self) -> &'static str {
        match self {
            ReportError::UnknownTable(_) => "UNKNOWN_TABLE",
            ReportError::Metrics(e) => e.code(),
        }
    }
}

/// Replays the first `upto` records of a log onto a base snapshot.
pub fn replay(base: &Snapshot, records: &[LogRecord], upto: u64) -> Result<Snapshot, StoreError> {
    if upto > records.len() as u64 {
        return Err(StoreError::BeyondLog {
            upto,
            len: records.len() as u64,
        });
    }
    let mut snapshot = base.clone();
    for (i, record) in records[..upto as usize].iter().enumerate() {
        let corrupt = |message: String| StoreError::CorruptLog { line: i + 1, message };
        let event = record.event();
        let doc = snapshot.document_of(&event).map_err(|e| corrupt(e.to_string()))?;
        if doc != record.doc_id {
            return Err(corrupt(format!(
                "record names document {} but set {} belongs to {doc}",
                record.doc_id, record.as_id
            )));
        }
        snapshot.apply(&event).map_err(|e| match e {
            e @ StoreError::CorruptLog { .. } => e,
            other => corrupt(other.to_string()),
        })?;
    }
    Ok(snapshot)
}

/// Outcome of an accepted write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Appended {
    pub seq: u64,
    pub as_id: AsId,
    /// True when the idempotency key had been seen and nothing was written.
    pub replayed: bool,
}

/// Single-writer store: the log, its current snapshot and the leases.
#[derive(Debug)]
pub struct Store {
    base: Snapshot,
    log: EventLog,
    snapshot: Arc<Snapshot>,
    leases: LeaseTable,
    idempotency: HashMap<(String, String), (u64, AsId)>,
}

impl Store {
    pub fn open(base: Snapshot, log: EventLog) -> Result<Store, StoreError> {
        let snapshot = replay(&base, log.records(), log.len() as u64)?;
        let idempotency = log
            .records()
            .iter()
            .filter_map(|r| {
                let key = r.idempotency_key.clone()?;
                Some(((r.annotator.clone(), key), (r.seq, r.as_id)))
            })
            .collect();
        Ok(Store {
            base,
            log,
            snapshot: Arc::new(snapshot),
            leases: LeaseTable::default(),
            idempotency,
        })
    }

    pub fn with_leases(mut self, leases: LeaseTable) -> Store {
        self.leases = leases;
        self
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.snapshot)
    }

    pub fn base(&self) -> &Snapshot {
        &self.base
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn lease_holder(&self, doc_id: &str, now: DateTime<Utc>) -> Option<&Lease> {
        self.leases.holder(doc_id, now)
    }

    pub fn leases(&self) -> &LeaseTable {
        &self.leases
    }

    pub fn acquire_lease(&mut self, doc_id: &str, annotator: &str, now: DateTime<Utc>) -> Result<Lease, StoreError> {
        if self.snapshot.corpus.document(doc_id).is_none() {
            return Err(StoreError::UnknownDocument(doc_id.to_owned()));
        }
        self.leases.acquire(doc_id, annotator, now)
    }

    pub fn release_lease(&mut self, doc_id: &str, token: &str) -> Result<(), StoreError> {
        self.leases.release(doc_id, token)
    }

    /// Validates, logs and applies one event. For CREATE the store assigns
    /// the new set id and `event.as_id` is ignored.
    ///
    /// The event is durable before the new snapshot becomes visible. A key
    /// already used by the same annotator returns the original outcome.
    pub fn append(
        &mut self,
        mut event: EditEvent,
        lease_token: &str,
        idempotency_key: Option<String>,
        now: DateTime<Utc>,
    ) -> Result<Appended, StoreError> {
        if let Some(key) = &idempotency_key {
            if let Some(&(seq, as_id)) = self.idempotency.get(&(event.annotator.clone(), key.clone())) {
                return Ok(Appended {
                    seq,
                    as_id,
                    replayed: true,
                });
            }
        }
        if matches!(event.action, EditAction::Create { .. }) {
            event.as_id = self.snapshot.next_as_id();
        }
        let doc_id = self.snapshot.document_of(&event)?;
        self.leases.check(&doc_id, lease_token, &event.annotator, now)?;

        event.seq = self.log.last_seq() + 1;
        let mut next = (*self.snapshot).clone();
        next.apply(&event)?;
        let record = LogRecord {
            seq: event.seq,
            as_id: event.as_id,
            doc_id,
            annotator: event.annotator.clone(),
            action: event.action.clone(),
            ts: event.timestamp,
            idempotency_key: idempotency_key.clone(),
        };
        self.log.append(record)?;
        self.snapshot = Arc::new(next);
        if let Some(key) = idempotency_key {
            self.idempotency.insert((event.annotator, key), (event.seq, event.as_id));
        }
        Ok(Appended {
            seq: event.seq,
            as_id: event.as_id,
            replayed: false,
        })
    }
}
