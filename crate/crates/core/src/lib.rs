//! Core of a semi-automatic frame-semantic annotation workbench.
//!
//! The pipeline ingests a frame inventory ([`framebank`]), a UD-parsed
//! corpus ([`corpus`]) and frame-semantic parser hypotheses
//! ([`preannot`]), resolves the hypotheses into annotation sets, and keeps a
//! frozen machine copy next to an editable copy that annotators review
//! ([`review`]). Every review action is an event in an append-only log
//! ([`store`]); conditions are rebuilt by replay and compared with the
//! metrics in [`metrics`].

pub mod corpus;
pub mod framebank;
pub mod metrics;
pub mod preannot;
pub mod review;
pub mod store;
pub mod upos;

pub use corpus::{Document, Sentence, Span, Token};
pub use framebank::{Frame, FrameBank, FrameElement, LexicalUnit, LuId};
pub use metrics::{Condition, ConditionLabel};
pub use review::{AnnotationSet, AsId, EditAction, EditEvent, Status};
pub use upos::Upos;
