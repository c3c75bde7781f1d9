use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::review::{AnnotationSet, AsId};

/// The three experimental annotation configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConditionLabel {
    Human,
    Machine,
    MachineHuman,
}

impl ConditionLabel {
    pub const ALL: [ConditionLabel; 3] = [
        ConditionLabel::Human,
        ConditionLabel::Machine,
        ConditionLabel::MachineHuman,
    ];

    /// Name used in report headers.
    pub fn display_name(self) -> &'static str {
        match self {
            ConditionLabel::Human => "Human",
            ConditionLabel::Machine => "Machine",
            ConditionLabel::MachineHuman => "Machine + Human",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionLabel::Human => "human",
            ConditionLabel::Machine => "machine",
            ConditionLabel::MachineHuman => "machine_human",
        }
    }
}

impl fmt::Display for ConditionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown condition {0:?} (expected human, machine or machine_human)")]
pub struct UnknownCondition(pub String);

impl FromStr for ConditionLabel {
    type Err = UnknownCondition;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(char::is_ascii_alphabetic)
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "human" => Ok(ConditionLabel::Human),
            "machine" => Ok(ConditionLabel::Machine),
            "machinehuman" | "mh" => Ok(ConditionLabel::MachineHuman),
            _ => Err(UnknownCondition(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConditionError {
    #[error("the {0} condition is frozen")]
    Frozen(ConditionLabel),
    #[error("annotation set {0} already exists")]
    DuplicateId(AsId),
}

/// A labeled copy of a corpus's annotation sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub label: ConditionLabel,
    frozen: bool,
    sets: BTreeMap<AsId, AnnotationSet>,
}

impl Condition {
    pub fn new(label: ConditionLabel) -> Condition {
        Condition {
            label,
            frozen: false,
            sets: BTreeMap::new(),
        }
    }

    pub fn from_sets(
        label: ConditionLabel,
        sets: impl IntoIterator<Item = AnnotationSet>,
    ) -> Result<Condition, ConditionError> {
        let mut c = Condition::new(label);
        for set in sets {
            c.insert(set)?;
        }
        Ok(c)
    }

    /// Makes the condition immutable.
    pub fn freeze(mut self) -> Condition {
        self.frozen = true;
        self
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn insert(&mut self, set: AnnotationSet) -> Result<(), ConditionError> {
        if self.frozen {
            return Err(ConditionError::Frozen(self.label));
        }
        if self.sets.contains_key(&set.id) {
            return Err(ConditionError::DuplicateId(set.id));
        }
        self.sets.insert(set.id, set);
        Ok(())
    }

    /// Replaces an existing set (same id) or inserts a new one.
    pub fn put(&mut self, set: AnnotationSet) -> Result<(), ConditionError> {
        if self.frozen {
            return Err(ConditionError::Frozen(self.label));
        }
        self.sets.insert(set.id, set);
        Ok(())
    }

    pub fn get(&self, id: AsId) -> Option<&AnnotationSet> {
        self.sets.get(&id)
    }

    pub fn contains(&self, id: AsId) -> bool {
        self.sets.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn max_id(&self) -> Option<AsId> {
        self.sets.keys().next_back().copied()
    }

    /// All sets, including deleted ones, in id order.
    pub fn iter(&self) -> impl Iterator<Item = &AnnotationSet> {
        self.sets.values()
    }

    /// The final dataset: every set except deleted ones.
    pub fn final_sets(&self) -> impl Iterator<Item = &AnnotationSet> {
        self.iter().filter(|s| !s.is_deleted())
    }

    pub fn sets_in_sentence<'a>(&'a self, sentence_id: &'a str) -> impl Iterator<Item = &'a AnnotationSet> + 'a {
        self.iter().filter(move |s| s.sentence_id == sentence_id)
    }

    pub fn sets_in_document<'a>(&'a self, document_id: &'a str) -> impl Iterator<Item = &'a AnnotationSet> + 'a {
        self.iter().filter(move |s| s.document_id == document_id)
    }

    /// Final sets grouped by sentence id.
    pub fn by_sentence(&self) -> BTreeMap<&str, Vec<&AnnotationSet>> {
        let mut map: BTreeMap<&str, Vec<&AnnotationSet>> = BTreeMap::new();
        for set in self.final_sets() {
            map.entry(set.sentence_id.as_str()).or_default().push(set);
        }
        map
    }

    pub fn document_ids(&self) -> BTreeSet<&str> {
        self.iter().map(|s| s.document_id.as_str()).collect()
    }
}
