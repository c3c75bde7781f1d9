//! Annotation sets and the edit state machine applied to them during review.
//!
//! An annotation set's status is never stored independently: it is always
//! recomputed from the kinds of the edits it has received (see
//! [`derive_status`]), so two sets with equal histories always agree.

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::Span;
use crate::framebank::{FrameBank, FrameBankError, LuId};
use crate::upos::Upos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AsId(pub u64);

impl fmt::Display for AsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NiKind {
    Ini,
    Dni,
    Cni,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Realization {
    Span(Span),
    NullInstantiation(NiKind),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeRealization {
    pub fe_name: String,
    #[serde(flatten)]
    pub realization: Realization,
}

impl FeRealization {
    pub fn span(fe_name: impl Into<String>, span: Span) -> Self {
        FeRealization {
            fe_name: fe_name.into(),
            realization: Realization::Span(span),
        }
    }

    pub fn null(fe_name: impl Into<String>, kind: NiKind) -> Self {
        FeRealization {
            fe_name: fe_name.into(),
            realization: Realization::NullInstantiation(kind),
        }
    }

    pub fn is_span(&self) -> bool {
        matches!(self.realization, Realization::Span(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    MachinePending,
    Accepted,
    Deleted,
    Updated,
    Created,
    Human,
}

impl Status {
    /// One of the four annotator verdicts on a pre-annotated condition.
    pub fn is_final(self) -> bool {
        matches!(
            self,
            Status::Accepted | Status::Deleted | Status::Updated | Status::Created
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    Machine,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EditKind {
    Accept,
    Delete,
    ReplaceFrame,
    AddFe,
    RemoveFe,
    SetNi,
    Create,
    TimerStart,
    TimerStop,
}

impl EditKind {
    pub fn modifies_content(self) -> bool {
        matches!(
            self,
            EditKind::ReplaceFrame | EditKind::AddFe | EditKind::RemoveFe | EditKind::SetNi
        )
    }

    pub fn is_timer(self) -> bool {
        matches!(self, EditKind::TimerStart | EditKind::TimerStop)
    }
}

/// An annotator action together with its kind-specific payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EditAction {
    Accept,
    Delete,
    ReplaceFrame {
        frame: String,
    },
    AddFe {
        fe: String,
        span: Span,
    },
    RemoveFe {
        fe: String,
    },
    SetNi {
        fe: String,
        ni: NiKind,
    },
    Create {
        document_id: String,
        sentence_id: String,
        target: Span,
        frame: String,
        lemma: String,
        pos: Upos,
    },
    TimerStart,
    TimerStop,
}

impl EditAction {
    pub fn kind(&self) -> EditKind {
        match self {
            EditAction::Accept => EditKind::Accept,
            EditAction::Delete => EditKind::Delete,
            EditAction::ReplaceFrame { .. } => EditKind::ReplaceFrame,
            EditAction::AddFe { .. } => EditKind::AddFe,
            EditAction::RemoveFe { .. } => EditKind::RemoveFe,
            EditAction::SetNi { .. } => EditKind::SetNi,
            EditAction::Create { .. } => EditKind::Create,
            EditAction::TimerStart => EditKind::TimerStart,
            EditAction::TimerStop => EditKind::TimerStop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditEvent {
    /// Log sequence number; zero until the event is appended.
    pub seq: u64,
    pub as_id: AsId,
    pub annotator: String,
    #[serde(flatten)]
    pub action: EditAction,
    pub timestamp: DateTime<Utc>,
}

impl EditEvent {
    pub fn new(as_id: AsId, annotator: impl Into<String>, action: EditAction, timestamp: DateTime<Utc>) -> Self {
        EditEvent {
            seq: 0,
            as_id,
            annotator: annotator.into(),
            action,
            timestamp,
        }
    }

    pub fn kind(&self) -> EditKind {
        self.action.kind()
    }
}

/// Reference from an annotation set to one of its events in the log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditRef {
    pub seq: u64,
    pub kind: EditKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub id: AsId,
    pub document_id: String,
    pub sentence_id: String,
    pub lu_id: LuId,
    pub frame: String,
    pub target_span: Span,
    pub fe_realizations: Vec<FeRealization>,
    pub status: Status,
    pub provenance: Provenance,
    /// Accumulated review time in milliseconds.
    pub time_spent_ms: u64,
    #[serde(default)]
    pub edit_log: Vec<EditRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timer_started: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_event_at: Option<DateTime<Utc>>,
}

/// The annotation content proper, without review bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AsContent<'a> {
    pub sentence_id: &'a str,
    pub lu_id: LuId,
    pub frame: &'a str,
    pub target_span: Span,
    pub fe_realizations: &'a [FeRealization],
}

impl AnnotationSet {
    pub fn is_deleted(&self) -> bool {
        self.status == Status::Deleted
    }

    pub fn realization(&self, fe: &str) -> Option<&FeRealization> {
        self.fe_realizations.iter().find(|r| r.fe_name == fe)
    }

    pub fn content(&self) -> AsContent<'_> {
        AsContent {
            sentence_id: &self.sentence_id,
            lu_id: self.lu_id,
            frame: &self.frame,
            target_span: self.target_span,
            fe_realizations: &self.fe_realizations,
        }
    }

    /// Canonical serialization of [`AnnotationSet::content`], for
    /// byte-level comparison between condition copies.
    pub fn content_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.content()).expect("content serializes")
    }

    pub fn time_spent_secs(&self) -> f64 {
        self.time_spent_ms as f64 / 1000.0
    }

    pub fn kinds(&self) -> impl Iterator<Item = EditKind> + '_ {
        self.edit_log.iter().map(|r| r.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReviewError {
    #[error("annotation set {0} is deleted")]
    EditAfterDelete(AsId),
    #[error("{fe} is not an FE of frame {frame}")]
    UnknownFe { fe: String, frame: String },
    #[error("{0} is already realized")]
    DuplicateFe(String),
    #[error("{0} is not realized")]
    FeNotRealized(String),
    #[error("annotation set {0} was modified and can no longer be accepted")]
    AcceptAfterModify(AsId),
    #[error("timer events out of order")]
    UnmatchedTimer,
    #[error("CREATE is only valid as the first event of a new annotation set")]
    CreateNotFirst,
    #[error("expected a CREATE event")]
    NotCreate,
    #[error("unknown frame: {0}")]
    UnknownFrame(String),
    #[error("unknown lexical unit {0}")]
    UnknownLu(LuId),
    #[error("empty or inverted span {0}")]
    BadSpan(Span),
    #[error("event targets annotation set {event} but was applied to {target}")]
    AsMismatch { event: AsId, target: AsId },
    #[error("event timestamp precedes the previous event on this annotation set")]
    NonMonotonicTimestamp,
}

impl ReviewError {
    pub fn code(&self) -> &'static str {
        match self {
            ReviewError::EditAfterDelete(_) => "EDIT_AFTER_DELETE",
            ReviewError::UnknownFe { .. } => "UNKNOWN_FE",
            ReviewError::DuplicateFe(_) => "DUPLICATE_FE",
            ReviewError::FeNotRealized(_) => "FE_NOT_REALIZED",
            ReviewError::AcceptAfterModify(_) => "ACCEPT_AFTER_MODIFY",
            ReviewError::UnmatchedTimer => "UNMATCHED_TIMER",
            ReviewError::CreateNotFirst => "CREATE_NOT_FIRST",
            ReviewError::NotCreate => "NOT_CREATE",
            ReviewError::UnknownFrame(_) => "UNKNOWN_FRAME",
            ReviewError::UnknownLu(_) => "UNKNOWN_LU",
            ReviewError::BadSpan(_) => "BAD_SPAN",
            ReviewError::AsMismatch { .. } => "AS_MISMATCH",
            ReviewError::NonMonotonicTimestamp => "NON_MONOTONIC_TIMESTAMP",
        }
    }
}

impl From<FrameBankError> for ReviewError {
    fn from(e: FrameBankError) -> Self {
        match e {
            FrameBankError::UnknownFrame(f) => ReviewError::UnknownFrame(f),
            other => ReviewError::UnknownFrame(other.to_string()),
        }
    }
}

/// Status implied by an edit history.
///
/// Precedence: any DELETE, then a leading CREATE, then any content edit,
/// then ACCEPT. Timer events are ignored.
pub fn derive_status<I>(kinds: I, provenance: Provenance) -> Status
where
    I: IntoIterator<Item = EditKind>,
{
    let mut first = None;
    let (mut deleted, mut modified, mut accepted) = (false, false, false);
    for kind in kinds {
        if first.is_none() && !kind.is_timer() {
            first = Some(kind);
        }
        match kind {
            EditKind::Delete => deleted = true,
            EditKind::Accept => accepted = true,
            k if k.modifies_content() => modified = true,
            _ => {}
        }
    }
    if deleted {
        Status::Deleted
    } else if first == Some(EditKind::Create) {
        Status::Created
    } else if modified {
        Status::Updated
    } else if accepted {
        Status::Accepted
    } else {
        match provenance {
            Provenance::Machine => Status::MachinePending,
            Provenance::Human => Status::Human,
        }
    }
}

/// Adds the interval `[start, stop]` to the set's review time.
pub fn record_time(
    set: &AnnotationSet,
    start: DateTime<Utc>,
    stop: DateTime<Utc>,
) -> Result<AnnotationSet, ReviewError> {
    let elapsed = (stop - start).num_milliseconds();
    if elapsed < 0 {
        return Err(ReviewError::UnmatchedTimer);
    }
    let mut next = set.clone();
    next.time_spent_ms += elapsed as u64;
    Ok(next)
}

/// Applies one edit to an annotation set, returning the updated set.
///
/// All validation happens before the frame bank is touched, so a rejected
/// edit leaves `bank` unchanged.
pub fn apply_edit(
    set: &AnnotationSet,
    event: &EditEvent,
    bank: &mut FrameBank,
) -> Result<AnnotationSet, ReviewError> {
    if event.as_id != set.id {
        return Err(ReviewError::AsMismatch {
            event: event.as_id,
            target: set.id,
        });
    }
    if set.last_event_at.is_some_and(|last| event.timestamp < last) {
        return Err(ReviewError::NonMonotonicTimestamp);
    }
    // Closing a timer that was running when the set was deleted is the one
    // edit a deleted set still accepts: deleting takes annotator time too.
    if set.is_deleted() && event.kind() != EditKind::TimerStop {
        return Err(ReviewError::EditAfterDelete(set.id));
    }

    let mut next = set.clone();
    match &event.action {
        EditAction::Accept => {
            if !matches!(set.status, Status::MachinePending | Status::Accepted) {
                return Err(ReviewError::AcceptAfterModify(set.id));
            }
        }
        EditAction::Delete => {}
        EditAction::ReplaceFrame { frame } => {
            if bank.frame(frame).is_none() {
                return Err(ReviewError::UnknownFrame(frame.clone()));
            }
            let old = bank.lu(set.lu_id).ok_or(ReviewError::UnknownLu(set.lu_id))?;
            let (lemma, pos) = (old.lemma.clone(), old.pos);
            let lu = bank.ensure_lu(&lemma, pos, frame)?;
            next.lu_id = lu.id;
            next.frame = frame.clone();
            next.fe_realizations.clear();
        }
        EditAction::AddFe { fe, span } => {
            check_new_fe(set, fe, bank)?;
            if span.is_empty() {
                return Err(ReviewError::BadSpan(*span));
            }
            next.fe_realizations.push(FeRealization::span(fe.clone(), *span));
        }
        EditAction::SetNi { fe, ni } => {
            check_new_fe(set, fe, bank)?;
            next.fe_realizations.push(FeRealization::null(fe.clone(), *ni));
        }
        EditAction::RemoveFe { fe } => {
            let before = next.fe_realizations.len();
            next.fe_realizations.retain(|r| &r.fe_name != fe);
            if next.fe_realizations.len() == before {
                return Err(ReviewError::FeNotRealized(fe.clone()));
            }
        }
        EditAction::Create { .. } => return Err(ReviewError::CreateNotFirst),
        EditAction::TimerStart => {
            if set.timer_started.is_some() {
                return Err(ReviewError::UnmatchedTimer);
            }
            next.timer_started = Some(event.timestamp);
        }
        EditAction::TimerStop => {
            let start = set.timer_started.ok_or(ReviewError::UnmatchedTimer)?;
            next = record_time(&next, start, event.timestamp)?;
            next.timer_started = None;
        }
    }
    push_event(&mut next, event);
    Ok(next)
}

fn check_new_fe(set: &AnnotationSet, fe: &str, bank: &FrameBank) -> Result<(), ReviewError> {
    let frame = bank
        .frame(&set.frame)
        .ok_or_else(|| ReviewError::UnknownFrame(set.frame.clone()))?;
    if !frame.has_fe(fe) {
        return Err(ReviewError::UnknownFe {
            fe: fe.to_owned(),
            frame: set.frame.clone(),
        });
    }
    if set.realization(fe).is_some() {
        return Err(ReviewError::DuplicateFe(fe.to_owned()));
    }
    Ok(())
}

fn push_event(set: &mut AnnotationSet, event: &EditEvent) {
    set.edit_log.push(EditRef {
        seq: event.seq,
        kind: event.kind(),
    });
    set.last_event_at = Some(event.timestamp);
    set.status = derive_status(set.kinds(), set.provenance);
}

/// Builds a new human-provenance annotation set from a CREATE event.
pub fn create_annotation_set(event: &EditEvent, bank: &mut FrameBank) -> Result<AnnotationSet, ReviewError> {
    let EditAction::Create {
        document_id,
        sentence_id,
        target,
        frame,
        lemma,
        pos,
    } = &event.action
    else {
        return Err(ReviewError::NotCreate);
    };
    if target.is_empty() {
        return Err(ReviewError::BadSpan(*target));
    }
    let lu = bank.ensure_lu(lemma, *pos, frame)?;
    let mut set = AnnotationSet {
        id: event.as_id,
        document_id: document_id.clone(),
        sentence_id: sentence_id.clone(),
        lu_id: lu.id,
        frame: frame.clone(),
        target_span: *target,
        fe_realizations: Vec::new(),
        status: Status::Human,
        provenance: Provenance::Human,
        time_spent_ms: 0,
        edit_log: Vec::new(),
        timer_started: None,
        last_event_at: None,
    };
    push_event(&mut set, event);
    Ok(set)
}
