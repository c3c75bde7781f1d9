//! Evaluation metrics over annotation conditions.
//!
//! Every per-document metric reads only non-deleted annotation sets, except
//! time accounting (deleting costs annotator time) and edit statistics
//! (deletion is one of the verdicts being counted).

mod condition;
pub mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::framebank::{minimal_core_requirement, FrameBank, FrameBankError};
use crate::review::{AnnotationSet, AsId, Status};

pub use condition::{Condition, ConditionError, ConditionLabel, UnknownCondition};
pub use report::{aggregate, emit_report, Column, ColumnKind, ReportFormat, ReportTable, TableRow};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("document {0} has no annotated sentences")]
    NoAnnotatedSentences(String),
    #[error("document {0} has no sentence annotated in both conditions")]
    NoComparableSentences(String),
    #[error("unknown frame: {0}")]
    UnknownFrame(String),
    #[error("document {0} has no timing data")]
    NoTimingData(String),
    #[error("annotation set {0} has not been reviewed")]
    UnfinalizedAs(AsId),
    #[error("no rows to aggregate")]
    EmptyInput,
    #[error(transparent)]
    Solver(#[from] FrameBankError),
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricsError::NoAnnotatedSentences(_) => "NO_ANNOTATED_SENTENCES",
            MetricsError::NoComparableSentences(_) => "NO_COMPARABLE_SENTENCES",
            MetricsError::UnknownFrame(_) => "UNKNOWN_FRAME",
            MetricsError::NoTimingData(_) => "NO_TIMING_DATA",
            MetricsError::UnfinalizedAs(_) => "UNFINALIZED_AS",
            MetricsError::EmptyInput => "EMPTY_INPUT",
            MetricsError::Solver(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ElementCounts {
    pub documents: usize,
    pub sentences_with_as: usize,
    pub annotation_sets: usize,
    pub fe_realizations: usize,
}

/// Counts documents, annotated sentences, sets and FE realizations in the
/// final (non-deleted) view of a condition.
pub fn count_elements(c: &Condition) -> ElementCounts {
    let mut documents = BTreeSet::new();
    let mut sentences = BTreeSet::new();
    let mut counts = ElementCounts::default();
    for set in c.final_sets() {
        documents.insert(set.document_id.as_str());
        sentences.insert((set.document_id.as_str(), set.sentence_id.as_str()));
        counts.annotation_sets += 1;
        counts.fe_realizations += set.fe_realizations.len();
    }
    counts.documents = documents.len();
    counts.sentences_with_as = sentences.len();
    counts
}

fn final_sets_in_doc<'a>(c: &'a Condition, doc: &'a Document) -> impl Iterator<Item = &'a AnnotationSet> + 'a {
    c.sets_in_document(&doc.id).filter(|s| !s.is_deleted())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityRow {
    pub doc_id: String,
    pub sentences_with_as: usize,
    pub unique_frames: usize,
    pub avg_frames_per_sentence: f64,
}

impl DiversityRow {
    pub fn new(doc_id: impl Into<String>, sentences_with_as: usize, unique_frames: usize) -> Result<Self, MetricsError> {
        let doc_id = doc_id.into();
        if sentences_with_as == 0 {
            return Err(MetricsError::NoAnnotatedSentences(doc_id));
        }
        Ok(DiversityRow {
            doc_id,
            sentences_with_as,
            unique_frames,
            avg_frames_per_sentence: unique_frames as f64 / sentences_with_as as f64,
        })
    }
}

/// Unique frames per document, and per annotated sentence. Sentences without
/// any annotation set are not counted.
pub fn frame_diversity(c: &Condition, doc: &Document) -> Result<DiversityRow, MetricsError> {
    let mut sentences = BTreeSet::new();
    let mut frames = BTreeSet::new();
    for set in final_sets_in_doc(c, doc) {
        sentences.insert(set.sentence_id.as_str());
        frames.insert(set.frame.as_str());
    }
    DiversityRow::new(doc.id.clone(), sentences.len(), frames.len())
}

/// Sparse frame-count vector of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameVector(pub BTreeMap<String, u32>);

impl FrameVector {
    pub fn from_sets<'a>(sets: impl IntoIterator<Item = &'a AnnotationSet>) -> FrameVector {
        let mut v = BTreeMap::new();
        for set in sets.into_iter().filter(|s| !s.is_deleted()) {
            *v.entry(set.frame.clone()).or_insert(0) += 1;
        }
        FrameVector(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.values().all(|&n| n == 0)
    }

    fn squared_norm(&self) -> f64 {
        self.0.values().map(|&n| f64::from(n) * f64::from(n)).sum()
    }

    /// Cosine similarity; zero if either vector is zero.
    ///
    /// The dot product walks keys in sorted order and the norms are combined
    /// under a single square root, so `a.cosine(b) == b.cosine(a)` exactly and
    /// equal vectors give exactly 1.
    pub fn cosine(&self, other: &FrameVector) -> f64 {
        let denom = (self.squared_norm() * other.squared_norm()).sqrt();
        if denom == 0.0 {
            return 0.0;
        }
        let dot: f64 = self
            .0
            .iter()
            .filter_map(|(k, &a)| other.0.get(k).map(|&b| f64::from(a) * f64::from(b)))
            .sum();
        (dot / denom).clamp(0.0, 1.0)
    }
}

pub fn sentence_frame_vector(c: &Condition, sentence_id: &str) -> FrameVector {
    FrameVector::from_sets(c.sets_in_sentence(sentence_id))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRow {
    pub doc_id: String,
    pub pair: (ConditionLabel, ConditionLabel),
    pub mean_cosine: f64,
}

/// Per-sentence cosines for sentences annotated in both conditions.
pub fn sentence_cosines(a: &Condition, b: &Condition, doc: &Document) -> Vec<(String, f64)> {
    doc.sentences
        .iter()
        .filter_map(|s| {
            let va = sentence_frame_vector(a, &s.id);
            let vb = sentence_frame_vector(b, &s.id);
            (!va.is_zero() && !vb.is_zero()).then(|| (s.id.clone(), va.cosine(&vb)))
        })
        .collect()
}

/// Mean sentence-level cosine between two conditions over one document.
pub fn condition_similarity(a: &Condition, b: &Condition, doc: &Document) -> Result<SimilarityRow, MetricsError> {
    let cosines = sentence_cosines(a, b, doc);
    if cosines.is_empty() {
        return Err(MetricsError::NoComparableSentences(doc.id.clone()));
    }
    let mean = cosines.iter().map(|(_, c)| c).sum::<f64>() / cosines.len() as f64;
    Ok(SimilarityRow {
        doc_id: doc.id.clone(),
        pair: (a.label, b.label),
        mean_cosine: mean,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessRow {
    pub doc_id: String,
    pub core_annotated: usize,
    pub min_required: usize,
    pub pct: f64,
}

impl CompletenessRow {
    /// Percentage is capped at 100, and is 100 when nothing is required.
    pub fn new(doc_id: impl Into<String>, core_annotated: usize, min_required: usize) -> Self {
        let pct = if min_required == 0 {
            100.0
        } else {
            (100.0 * core_annotated as f64 / min_required as f64).min(100.0)
        };
        CompletenessRow {
            doc_id: doc_id.into(),
            core_annotated,
            min_required,
            pct,
        }
    }
}

/// Core FEs annotated (spans or null instantiations) against the sum of
/// each set's minimal core requirement.
pub fn core_completeness(c: &Condition, doc: &Document, bank: &FrameBank) -> Result<CompletenessRow, MetricsError> {
    let mut requirement: HashMap<&str, usize> = HashMap::new();
    let (mut core, mut min) = (0, 0);
    for set in final_sets_in_doc(c, doc) {
        let frame = bank
            .frame(&set.frame)
            .ok_or_else(|| MetricsError::UnknownFrame(set.frame.clone()))?;
        core += set
            .fe_realizations
            .iter()
            .filter(|r| frame.is_core(&r.fe_name))
            .count();
        min += match requirement.get(frame.name.as_str()) {
            Some(&n) => n,
            None => {
                let n = minimal_core_requirement(frame)?.count;
                requirement.insert(frame.name.as_str(), n);
                n
            }
        };
    }
    Ok(CompletenessRow::new(doc.id.clone(), core, min))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub doc_id: String,
    pub sentences: usize,
    pub avg_sentence_length: f64,
    pub human_avg_min: f64,
    pub mh_avg_min: f64,
    pub diff: f64,
}

impl TimeRow {
    pub fn new(doc_id: impl Into<String>, sentences: usize, avg_sentence_length: f64, human_avg_min: f64, mh_avg_min: f64) -> Self {
        TimeRow {
            doc_id: doc_id.into(),
            sentences,
            avg_sentence_length,
            human_avg_min,
            mh_avg_min,
            diff: human_avg_min - mh_avg_min,
        }
    }
}

/// Review time per sentence in milliseconds, for sentences with time recorded.
/// Deleted sets are included.
fn sentence_times<'a>(c: &'a Condition, doc: &'a Document) -> BTreeMap<&'a str, u64> {
    let mut times: BTreeMap<&str, u64> = BTreeMap::new();
    for set in c.sets_in_document(&doc.id).filter(|s| s.time_spent_ms > 0) {
        *times.entry(set.sentence_id.as_str()).or_insert(0) += set.time_spent_ms;
    }
    times
}

fn mean_minutes(times: &BTreeMap<&str, u64>) -> f64 {
    let total: u64 = times.values().sum();
    total as f64 / 60_000.0 / times.len() as f64
}

/// Average review minutes per sentence in the human and machine+human
/// conditions. `sentences` and the average length cover every sentence
/// timed in at least one of the two.
pub fn time_report(human: &Condition, mh: &Condition, doc: &Document) -> Result<TimeRow, MetricsError> {
    let h = sentence_times(human, doc);
    let m = sentence_times(mh, doc);
    if h.is_empty() || m.is_empty() {
        return Err(MetricsError::NoTimingData(doc.id.clone()));
    }
    let timed: BTreeSet<&str> = h.keys().chain(m.keys()).copied().collect();
    let lengths: Vec<usize> = doc
        .sentences
        .iter()
        .filter(|s| timed.contains(s.id.as_str()))
        .map(|s| s.len())
        .collect();
    let avg_len = if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
    };
    Ok(TimeRow::new(doc.id.clone(), timed.len(), avg_len, mean_minutes(&h), mean_minutes(&m)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditStatsRow {
    pub doc_id: String,
    pub total: usize,
    pub accepted: usize,
    pub created: usize,
    pub deleted: usize,
    pub updated: usize,
    pub pct_accepted: f64,
    pub pct_created: f64,
    pub pct_deleted: f64,
    pub pct_updated: f64,
}

impl EditStatsRow {
    /// CREATED is a share of the final dataset (total minus deleted); the
    /// other three are shares of the total.
    pub fn from_counts(doc_id: impl Into<String>, accepted: usize, created: usize, deleted: usize, updated: usize) -> Self {
        let total = accepted + created + deleted + updated;
        let pct = |n: usize, d: usize| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
        EditStatsRow {
            doc_id: doc_id.into(),
            total,
            accepted,
            created,
            deleted,
            updated,
            pct_accepted: pct(accepted, total),
            pct_created: pct(created, total - deleted),
            pct_deleted: pct(deleted, total),
            pct_updated: pct(updated, total),
        }
    }
}

/// Verdict counts over every set of a document in a finalized condition.
pub fn edit_stats(mh: &Condition, doc: &Document) -> Result<EditStatsRow, MetricsError> {
    let (mut accepted, mut created, mut deleted, mut updated) = (0, 0, 0, 0);
    for set in mh.sets_in_document(&doc.id) {
        match set.status {
            Status::Accepted => accepted += 1,
            Status::Created => created += 1,
            Status::Deleted => deleted += 1,
            Status::Updated => updated += 1,
            Status::MachinePending | Status::Human => return Err(MetricsError::UnfinalizedAs(set.id)),
        }
    }
    Ok(EditStatsRow::from_counts(doc.id.clone(), accepted, created, deleted, updated))
}

/// First annotation set in the condition still awaiting a verdict.
pub fn first_unfinalized(c: &Condition) -> Option<AsId> {
    c.iter().find(|s| !s.status.is_final()).map(|s| s.id)
}
