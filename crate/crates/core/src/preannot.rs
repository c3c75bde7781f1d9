//! Frame-semantic parser hypotheses and their resolution into annotation
//! sets: recover lemma/POS under the target span, find or create the LU,
//! and attach the FE spans the parser assigned.
//!
//! Resolution never fails. Problems with a hypothesis are reported as
//! warnings so that one bad FE does not cost the rest of a document.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, Document, Sentence, Span};
use crate::framebank::FrameBank;
use crate::metrics::{Condition, ConditionLabel};
use crate::review::{AnnotationSet, AsId, FeRealization, Provenance, Status};

#[derive(Debug, thiserror::Error)]
pub enum PreannotError {
    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },
}

impl PreannotError {
    pub fn code(&self) -> &'static str {
        "SCHEMA_ERROR"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeSpan {
    #[serde(rename = "name")]
    pub fe_name: String,
    #[serde(flatten)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParserHypothesis {
    pub sentence_id: String,
    #[serde(rename = "target")]
    pub target_span: Span,
    #[serde(rename = "frame")]
    pub frame_name: String,
    #[serde(rename = "fes", default)]
    pub fe_spans: Vec<FeSpan>,
}

/// Reads one hypothesis per line, preserving file order.
pub fn load_preannotation<R: BufRead>(source: R) -> Result<Vec<ParserHypothesis>, PreannotError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let schema = |message: String| PreannotError::Schema { line: i + 1, message };
        let line = line.map_err(|e| schema(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WarningCode {
    UnknownFrame,
    UnknownFe,
    BadSpan,
    EmptySpan,
    DuplicateFe,
    UnknownSentence,
}

impl WarningCode {
    pub fn as_str(self) -> &'static str {
        match self {
            WarningCode::UnknownFrame => "UNKNOWN_FRAME",
            WarningCode::UnknownFe => "UNKNOWN_FE",
            WarningCode::BadSpan => "BAD_SPAN",
            WarningCode::EmptySpan => "EMPTY_SPAN",
            WarningCode::DuplicateFe => "DUPLICATE_FE",
            WarningCode::UnknownSentence => "UNKNOWN_SENTENCE",
        }
    }
}

impl fmt::Display for WarningCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub code: WarningCode,
    pub detail: String,
}

impl Warning {
    fn new(code: WarningCode, detail: impl Into<String>) -> Warning {
        Warning {
            code,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionOutcome {
    pub annotation_set: Option<AnnotationSet>,
    pub warnings: Vec<Warning>,
}

impl ResolutionOutcome {
    fn rejected(warning: Warning) -> Self {
        ResolutionOutcome {
            annotation_set: None,
            warnings: vec![warning],
        }
    }
}

/// Resolves one hypothesis against its sentence, creating the LU if needed.
pub fn resolve(h: &ParserHypothesis, sentence: &Sentence, bank: &mut FrameBank, id: AsId) -> ResolutionOutcome {
    if h.sentence_id != sentence.id {
        return ResolutionOutcome::rejected(Warning::new(
            WarningCode::UnknownSentence,
            format!("hypothesis for {} resolved against {}", h.sentence_id, sentence.id),
        ));
    }
    let Some(frame) = bank.frame(&h.frame_name).cloned() else {
        return ResolutionOutcome::rejected(Warning::new(
            WarningCode::UnknownFrame,
            format!("{}: frame {}", h.sentence_id, h.frame_name),
        ));
    };
    let (lemma, pos) = match sentence.span_lemma_pos(h.target_span) {
        Ok(found) => found,
        Err(CorpusError::EmptySpan(span)) => {
            return ResolutionOutcome::rejected(Warning::new(
                WarningCode::EmptySpan,
                format!("{}: target {span} covers no token", h.sentence_id),
            ))
        }
        Err(e) => {
            return ResolutionOutcome::rejected(Warning::new(
                WarningCode::BadSpan,
                format!("{}: target: {e}", h.sentence_id),
            ))
        }
    };

    let mut warnings = Vec::new();
    let mut realizations: Vec<FeRealization> = Vec::new();
    for fe in &h.fe_spans {
        if !frame.has_fe(&fe.fe_name) {
            warnings.push(Warning::new(
                WarningCode::UnknownFe,
                format!("{}: {} is not an FE of {}", h.sentence_id, fe.fe_name, frame.name),
            ));
        } else if !fe.span.is_within(sentence.len()) {
            warnings.push(Warning::new(
                WarningCode::BadSpan,
                format!("{}: {} span {} outside sentence of length {}", h.sentence_id, fe.fe_name, fe.span, sentence.len()),
            ));
        } else if realizations.iter().any(|r| r.fe_name == fe.fe_name) {
            warnings.push(Warning::new(
                WarningCode::DuplicateFe,
                format!("{}: {} assigned more than once", h.sentence_id, fe.fe_name),
            ));
        } else {
            realizations.push(FeRealization::span(fe.fe_name.clone(), fe.span));
        }
    }

    let lu = bank
        .ensure_lu(&lemma, pos, &frame.name)
        .expect("frame presence checked above");
    ResolutionOutcome {
        annotation_set: Some(AnnotationSet {
            id,
            document_id: sentence.document_id.clone(),
            sentence_id: sentence.id.clone(),
            lu_id: lu.id,
            frame: frame.name.clone(),
            target_span: h.target_span,
            fe_realizations: realizations,
            status: Status::MachinePending,
            provenance: Provenance::Machine,
            time_spent_ms: 0,
            edit_log: Vec::new(),
            timer_started: None,
            last_event_at: None,
        }),
        warnings,
    }
}

/// Outcome of resolving a whole hypothesis file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BatchResolution {
    pub sets: Vec<AnnotationSet>,
    /// Warnings with the 0-based index of the hypothesis that raised them.
    pub warnings: Vec<(usize, Warning)>,
}

impl BatchResolution {
    pub fn warning_tally(&self) -> BTreeMap<WarningCode, usize> {
        let mut tally = BTreeMap::new();
        for (_, w) in &self.warnings {
            *tally.entry(w.code).or_insert(0) += 1;
        }
        tally
    }
}

/// Resolves hypotheses in order, numbering the resulting sets from `first_id`.
pub fn resolve_all(
    hypotheses: &[ParserHypothesis],
    corpus: &[Document],
    bank: &mut FrameBank,
    first_id: u64,
) -> BatchResolution {
    let sentences: HashMap<&str, &Sentence> = corpus
        .iter()
        .flat_map(|d| d.sentences.iter())
        .map(|s| (s.id.as_str(), s))
        .collect();
    let mut next_id = first_id;
    let mut out = BatchResolution::default();
    for (i, h) in hypotheses.iter().enumerate() {
        let Some(sentence) = sentences.get(h.sentence_id.as_str()) else {
            out.warnings.push((
                i,
                Warning::new(WarningCode::UnknownSentence, format!("sentence {} not in corpus", h.sentence_id)),
            ));
            continue;
        };
        let outcome = resolve(h, sentence, bank, AsId(next_id));
        out.warnings.extend(outcome.warnings.into_iter().map(|w| (i, w)));
        if let Some(set) = outcome.annotation_set {
            out.sets.push(set);
            next_id += 1;
        }
    }
    out
}

/// The frozen machine condition, the editable seed of the machine+human
/// condition, and a map from each seed set to its machine counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Materialized {
    pub machine: Condition,
    pub machine_human_seed: Condition,
    pub cross_ref: BTreeMap<AsId, AsId>,
}

/// Copies resolved sets into two id-disjoint conditions. The machine copy
/// keeps the input ids; seed ids continue after the largest of them.
pub fn materialize_conditions(resolved: Vec<AnnotationSet>) -> Materialized {
    let offset = resolved.iter().map(|s| s.id.0).max().unwrap_or(0);
    let mut seed = Condition::new(ConditionLabel::MachineHuman);
    let mut cross_ref = BTreeMap::new();
    for (i, set) in resolved.iter().enumerate() {
        let copy = AnnotationSet {
            id: AsId(offset + 1 + i as u64),
            ..set.clone()
        };
        cross_ref.insert(copy.id, set.id);
        seed.insert(copy).expect("fresh ids are unique");
    }
    let machine = Condition::from_sets(ConditionLabel::Machine, resolved)
        .expect("resolved ids are unique")
        .freeze();
    Materialized {
        machine,
        machine_human_seed: seed,
        cross_ref,
    }
}
