//! Annotation JSONL: one annotation set per line, self-describing (frame,
//! lemma and POS spelled out rather than referenced by id). Used for
//! `fw export` and for importing the human condition.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Sentence, Span};
use crate::framebank::FrameBank;
use crate::metrics::{Condition, ConditionLabel};
use crate::review::{AnnotationSet, AsId, FeRealization, NiKind, Provenance, Realization, Status};
use crate::upos::Upos;

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeRecord {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ni: Option<NiKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<AsId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionLabel>,
    pub document_id: String,
    pub sentence_id: String,
    pub frame: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Upos>,
    pub target: Span,
    #[serde(default)]
    pub fes: Vec<FeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default)]
    pub time_spent_secs: f64,
}

pub fn load_annotation_records<R: BufRead>(source: R) -> Result<Vec<AnnotationRecord>, RecordError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let err = |message: String| RecordError { line: i + 1, message };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

/// Turns imported human records into annotation sets numbered from
/// `first_id`, creating LUs as needed. Unlike parser output, human data is
/// rejected outright on any inconsistency.
pub fn human_condition(
    records: &[AnnotationRecord],
    corpus: &[Document],
    bank: &mut FrameBank,
    first_id: u64,
) -> Result<Condition, RecordError> {
    let sentences: HashMap<&str, &Sentence> = corpus
        .iter()
        .flat_map(|d| d.sentences.iter())
        .map(|s| (s.id.as_str(), s))
        .collect();
    let mut condition = Condition::new(ConditionLabel::Human);
    for (i, r) in records.iter().enumerate() {
        let err = |message: String| RecordError { line: i + 1, message };
        let sentence = sentences
            .get(r.sentence_id.as_str())
            .ok_or_else(|| err(format!("unknown sentence {}", r.sentence_id)))?;
        if sentence.document_id != r.document_id {
            return Err(err(format!(
                "sentence {} belongs to document {}, not {}",
                r.sentence_id, sentence.document_id, r.document_id
            )));
        }
        if !r.target.is_within(sentence.len()) {
            return Err(err(format!("target {} outside sentence", r.target)));
        }
        let frame = bank
            .frame(&r.frame)
            .ok_or_else(|| err(format!("unknown frame {}", r.frame)))?
            .clone();
        let (lemma, pos) = match (&r.lemma, r.pos) {
            (Some(l), Some(p)) => (l.clone(), p),
            _ => sentence.span_lemma_pos(r.target).map_err(|e| err(e.to_string()))?,
        };
        let mut realizations: Vec<FeRealization> = Vec::new();
        for fe in &r.fes {
            if !frame.has_fe(&fe.name) {
                return Err(err(format!("{} is not an FE of {}", fe.name, frame.name)));
            }
            if realizations.iter().any(|x| x.fe_name == fe.name) {
                return Err(err(format!("{} realized twice", fe.name)));
            }
            let realization = match (fe.start, fe.end, fe.ni) {
                (Some(s), Some(e), None) if Span::new(s, e).is_within(sentence.len()) => Realization::Span(Span::new(s, e)),
                (None, None, Some(kind)) => Realization::NullInstantiation(kind),
                _ => return Err(err(format!("{} needs either a valid span or a null instantiation", fe.name))),
            };
            realizations.push(FeRealization {
                fe_name: fe.name.clone(),
                realization,
            });
        }
        let lu = bank.ensure_lu(&lemma, pos, &frame.name).map_err(|e| err(e.to_string()))?;
        condition
            .insert(AnnotationSet {
                id: AsId(first_id + i as u64),
                document_id: r.document_id.clone(),
                sentence_id: r.sentence_id.clone(),
                lu_id: lu.id,
                frame: frame.name.clone(),
                target_span: r.target,
                fe_realizations: realizations,
                status: Status::Human,
                provenance: Provenance::Human,
                time_spent_ms: (r.time_spent_secs.max(0.0) * 1000.0).round() as u64,
                edit_log: Vec::new(),
                timer_started: None,
                last_event_at: None,
            })
            .map_err(|e| err(e.to_string()))?;
    }
    Ok(condition)
}

pub fn to_record(set: &AnnotationSet, label: ConditionLabel, bank: &FrameBank) -> AnnotationRecord {
    let lu = bank.lu(set.lu_id);
    AnnotationRecord {
        id: Some(set.id),
        condition: Some(label),
        document_id: set.document_id.clone(),
        sentence_id: set.sentence_id.clone(),
        frame: set.frame.clone(),
        lemma: lu.map(|l| l.lemma.clone()),
        pos: lu.map(|l| l.pos),
        target: set.target_span,
        fes: set
            .fe_realizations
            .iter()
            .map(|r| match r.realization {
                Realization::Span(s) => FeRecord {
                    name: r.fe_name.clone(),
                    start: Some(s.start),
                    end: Some(s.end),
                    ni: None,
                },
                Realization::NullInstantiation(kind) => FeRecord {
                    name: r.fe_name.clone(),
                    start: None,
                    end: None,
                    ni: Some(kind),
                },
            })
            .collect(),
        status: Some(set.status),
        provenance: Some(set.provenance),
        time_spent_secs: set.time_spent_secs(),
    }
}

/// Writes every set of a condition (deleted ones included) in id order.
pub fn export_condition<W: Write>(condition: &Condition, bank: &FrameBank, mut out: W) -> std::io::Result<usize> {
    let mut n = 0;
    for set in condition.iter() {
        serde_json::to_writer(&mut out, &to_record(set, condition.label, bank))?;
        out.write_all(b"\n")?;
        n += 1;
    }
    Ok(n)
}
