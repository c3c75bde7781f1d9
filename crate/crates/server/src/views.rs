//! JSON shapes served to clients.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use fw_core::corpus::Token;
use fw_core::framebank::{minimal_core_requirement, CoreRequirement, FrameElement};
use fw_core::store::{Lease, Snapshot};
use fw_core::{AnnotationSet, AsId, ConditionLabel, Document, Frame, Sentence, Upos};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct LeaseView {
    pub annotator: String,
    pub expires_at: DateTime<Utc>,
}

impl From<&Lease> for LeaseView {
    fn from(l: &Lease) -> LeaseView {
        LeaseView {
            annotator: l.annotator.clone(),
            expires_at: l.expires_at,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DocumentSummary {
    pub id: String,
    pub title: String,
    pub sentences: usize,
    /// Number of annotation sets per condition, deleted ones included.
    pub annotation_sets: BTreeMap<&'static str, usize>,
    pub lease: Option<LeaseView>,
}

impl DocumentSummary {
    pub fn new(snap: &Snapshot, doc: &Document, lease: Option<&Lease>) -> DocumentSummary {
        let annotation_sets = ConditionLabel::ALL
            .iter()
            .map(|&l| (l.as_str(), snap.condition(l).sets_in_document(&doc.id).count()))
            .collect();
        DocumentSummary {
            id: doc.id.clone(),
            title: doc.title.clone(),
            sentences: doc.sentences.len(),
            annotation_sets,
            lease: lease.map(LeaseView::from),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SentenceView<'a> {
    pub id: &'a str,
    pub document_id: &'a str,
    pub text: &'a str,
    pub tokens: &'a [Token],
    pub annotation_sets: usize,
}

impl<'a> SentenceView<'a> {
    pub fn new(snap: &Snapshot, condition: ConditionLabel, s: &'a Sentence) -> SentenceView<'a> {
        SentenceView {
            id: &s.id,
            document_id: &s.document_id,
            text: &s.text,
            tokens: &s.tokens,
            annotation_sets: snap.condition(condition).sets_in_sentence(&s.id).count(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AnnotationSetView<'a> {
    #[serde(flatten)]
    pub set: &'a AnnotationSet,
    pub condition: ConditionLabel,
    pub lemma: Option<&'a str>,
    pub pos: Option<Upos>,
    /// The machine set this one was seeded from, if any.
    pub machine_id: Option<AsId>,
}

impl<'a> AnnotationSetView<'a> {
    pub fn new(snap: &'a Snapshot, condition: ConditionLabel, set: &'a AnnotationSet) -> AnnotationSetView<'a> {
        let lu = snap.bank.lu(set.lu_id);
        AnnotationSetView {
            set,
            condition,
            lemma: lu.map(|l| l.lemma.as_str()),
            pos: lu.map(|l| l.pos),
            machine_id: snap.cross_ref.get(&set.id).copied(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FrameSummary<'a> {
    pub id: &'a str,
    pub name: &'a str,
    pub core_fes: Vec<&'a str>,
}

impl<'a> From<&'a Frame> for FrameSummary<'a> {
    fn from(f: &'a Frame) -> FrameSummary<'a> {
        FrameSummary {
            id: &f.id,
            name: &f.name,
            core_fes: f.core_fe_names().into_iter().collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FrameDetail<'a> {
    pub id: &'a str,
    pub name: &'a str,
    pub definition: &'a str,
    pub fes: &'a [FrameElement],
    pub excludes: Vec<[&'a str; 2]>,
    pub core_sets: &'a [BTreeSet<String>],
    /// Absent when the frame has too many core FEs for the exact search.
    pub minimal_core_requirement: Option<CoreRequirement>,
}

impl<'a> From<&'a Frame> for FrameDetail<'a> {
    fn from(f: &'a Frame) -> FrameDetail<'a> {
        FrameDetail {
            id: &f.id,
            name: &f.name,
            definition: &f.definition,
            fes: &f.fes,
            excludes: f.excludes.iter().map(|p| [p.first(), p.second()]).collect(),
            core_sets: &f.core_sets,
            minimal_core_requirement: minimal_core_requirement(f).ok(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AppendView<'a> {
    pub seq: u64,
    pub as_id: AsId,
    /// True when the idempotency key had already been used.
    pub replayed: bool,
    pub annotation_set: Option<AnnotationSetView<'a>>,
}
