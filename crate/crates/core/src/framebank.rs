//! Frame inventory: frames, frame elements, excludes relations, core sets
//! and lexical units.
//!
//! The bank is read-mostly. The only mutation is [`FrameBank::ensure_lu`],
//! which callers must serialize (the event store is the single writer).

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::upos::Upos;

/// Core-FE count above which [`minimal_core_requirement`] refuses to search.
pub const DEFAULT_CORE_FE_CAP: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum FrameBankError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("frame {frame}: {fe} is not a core FE of the frame")]
    DanglingRef { frame: String, fe: String },
    #[error("duplicate {0}")]
    Duplicate(String),
    #[error("unknown frame: {0}")]
    UnknownFrame(String),
    #[error("frame {frame} has {count} core FEs, above the search cap of {cap}")]
    TooManyCoreFes {
        frame: String,
        count: usize,
        cap: usize,
    },
}

impl FrameBankError {
    pub fn code(&self) -> &'static str {
        match self {
            FrameBankError::Schema(_) => "SCHEMA_ERROR",
            FrameBankError::DanglingRef { .. } => "DANGLING_REF",
            FrameBankError::Duplicate(_) => "DUPLICATE",
            FrameBankError::UnknownFrame(_) => "UNKNOWN_FRAME",
            FrameBankError::TooManyCoreFes { .. } => "TOO_MANY_CORE_FES",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coreness {
    Core,
    NonCore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameElement {
    pub name: String,
    pub coreness: Coreness,
    #[serde(default)]
    pub definition: String,
}

impl FrameElement {
    pub fn is_core(&self) -> bool {
        self.coreness == Coreness::Core
    }
}

/// An unordered pair of FE names, stored with the smaller name first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FePair(String, String);

impl FePair {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Self {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            FePair(a, b)
        } else {
            FePair(b, a)
        }
    }

    pub fn first(&self) -> &str {
        &self.0
    }

    pub fn second(&self) -> &str {
        &self.1
    }

    pub fn contains(&self, fe: &str) -> bool {
        self.0 == fe || self.1 == fe
    }

    /// The other member of the pair, if `fe` is one of them.
    pub fn partner(&self, fe: &str) -> Option<&str> {
        if self.0 == fe {
            Some(&self.1)
        } else if self.1 == fe {
            Some(&self.0)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub id: String,
    pub name: String,
    pub definition: String,
    pub fes: Vec<FrameElement>,
    pub excludes: BTreeSet<FePair>,
    pub core_sets: Vec<BTreeSet<String>>,
}

impl Frame {
    /// Builds and validates a frame. `id` defaults to the name.
    pub fn new(
        id: Option<String>,
        name: impl Into<String>,
        definition: impl Into<String>,
        fes: Vec<FrameElement>,
        excludes: impl IntoIterator<Item = (String, String)>,
        core_sets: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<Frame, FrameBankError> {
        let name = name.into();
        let mut seen = BTreeSet::new();
        for fe in &fes {
            if !seen.insert(fe.name.as_str()) {
                return Err(FrameBankError::Duplicate(format!(
                    "FE {} in frame {}",
                    fe.name, name
                )));
            }
        }
        let core_check = |fe: &str| -> Result<(), FrameBankError> {
            match fes.iter().find(|f| f.name == fe) {
                Some(f) if f.is_core() => Ok(()),
                _ => Err(FrameBankError::DanglingRef {
                    frame: name.clone(),
                    fe: fe.to_owned(),
                }),
            }
        };

        let mut pairs = BTreeSet::new();
        for (a, b) in excludes {
            core_check(&a)?;
            core_check(&b)?;
            if a == b {
                return Err(FrameBankError::Schema(format!(
                    "frame {name}: FE {a} cannot exclude itself"
                )));
            }
            pairs.insert(FePair::new(a, b));
        }

        let mut sets = Vec::new();
        for members in core_sets {
            for fe in &members {
                core_check(fe)?;
            }
            let set: BTreeSet<String> = members.into_iter().collect();
            if set.len() < 2 {
                return Err(FrameBankError::Schema(format!(
                    "frame {name}: core sets need at least two distinct members"
                )));
            }
            sets.push(set);
        }

        Ok(Frame {
            id: id.unwrap_or_else(|| name.clone()),
            name,
            definition: definition.into(),
            fes,
            excludes: pairs,
            core_sets: sets,
        })
    }

    pub fn fe(&self, name: &str) -> Option<&FrameElement> {
        self.fes.iter().find(|fe| fe.name == name)
    }

    pub fn has_fe(&self, name: &str) -> bool {
        self.fe(name).is_some()
    }

    pub fn is_core(&self, name: &str) -> bool {
        self.fe(name).is_some_and(FrameElement::is_core)
    }

    /// Core FE names in lexicographic order.
    pub fn core_fe_names(&self) -> BTreeSet<&str> {
        self.fes
            .iter()
            .filter(|fe| fe.is_core())
            .map(|fe| fe.name.as_str())
            .collect()
    }

    /// Core FEs covered by annotating `fe`: itself, its excludes partners
    /// and every FE sharing a core set with it.
    pub fn covered_by(&self, fe: &str) -> BTreeSet<&str> {
        let mut covered = BTreeSet::new();
        let Some(own) = self.fe(fe).filter(|f| f.is_core()) else {
            return covered;
        };
        covered.insert(own.name.as_str());
        for pair in &self.excludes {
            if let Some(partner) = pair.partner(fe) {
                covered.insert(partner);
            }
        }
        for set in self.core_sets.iter().filter(|s| s.contains(fe)) {
            covered.extend(set.iter().map(String::as_str));
        }
        covered
    }
}

/// Smallest set of core FEs whose annotation completes an instance of a frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreRequirement {
    pub count: usize,
    pub witness: BTreeSet<String>,
}

/// Minimum number of core FEs that must be annotated, with the default cap.
pub fn minimal_core_requirement(frame: &Frame) -> Result<CoreRequirement, FrameBankError> {
    minimal_core_requirement_capped(frame, DEFAULT_CORE_FE_CAP)
}

/// Exact minimum dominating set over the core-FE coverage relation.
///
/// Subsets are enumerated by increasing size and, within a size, in
/// lexicographic order of the sorted FE names, so the first covering subset
/// found is both minimum and the lexicographically smallest witness.
pub fn minimal_core_requirement_capped(
    frame: &Frame,
    cap: usize,
) -> Result<CoreRequirement, FrameBankError> {
    let names: Vec<&str> = frame.core_fe_names().into_iter().collect();
    let n = names.len();
    if n > cap || n > 31 {
        return Err(FrameBankError::TooManyCoreFes {
            frame: frame.name.clone(),
            count: n,
            cap,
        });
    }

    let position = |fe: &str| names.binary_search(&fe).ok();
    let cover: Vec<u32> = names
        .iter()
        .map(|fe| {
            frame
                .covered_by(fe)
                .into_iter()
                .filter_map(position)
                .fold(0u32, |mask, i| mask | (1 << i))
        })
        .collect();
    let full: u32 = if n == 0 { 0 } else { (1u32 << n) - 1 };

    for size in 0..=n {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let mask = combo.iter().fold(0u32, |m, &i| m | cover[i]);
            if mask == full {
                return Ok(CoreRequirement {
                    count: size,
                    witness: combo.iter().map(|&i| names[i].to_owned()).collect(),
                });
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
    }
    unreachable!("the full core-FE set always covers itself")
}

/// Advances `combo` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LuId(pub u32);

impl fmt::Display for LuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lu{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LuProvenance {
    #[default]
    Curated,
    AutoCreated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexicalUnit {
    pub id: LuId,
    pub lemma: String,
    pub pos: Upos,
    pub frame_id: String,
    pub provenance: LuProvenance,
}

type LuKey = (String, Upos, String);

#[derive(Debug, Clone, Default)]
pub struct FrameBank {
    frames: Vec<Frame>,
    by_name: HashMap<String, usize>,
    by_id: HashMap<String, usize>,
    lus: Vec<LexicalUnit>,
    lu_index: HashMap<LuKey, usize>,
}

impl PartialEq for FrameBank {
    fn eq(&self, other: &Self) -> bool {
        self.frames == other.frames && self.lus == other.lus
    }
}

impl FrameBank {
    pub fn new() -> FrameBank {
        FrameBank::default()
    }

    pub fn add_frame(&mut self, frame: Frame) -> Result<(), FrameBankError> {
        if self.by_name.contains_key(&frame.name) {
            return Err(FrameBankError::Duplicate(format!("frame name {}", frame.name)));
        }
        if self.by_id.contains_key(&frame.id) {
            return Err(FrameBankError::Duplicate(format!("frame id {}", frame.id)));
        }
        let idx = self.frames.len();
        self.by_name.insert(frame.name.clone(), idx);
        self.by_id.insert(frame.id.clone(), idx);
        self.frames.push(frame);
        Ok(())
    }

    /// Inserts a lexical unit under a fresh id.
    pub fn add_lu(
        &mut self,
        lemma: &str,
        pos: Upos,
        frame_name: &str,
        provenance: LuProvenance,
    ) -> Result<LexicalUnit, FrameBankError> {
        let frame_id = self
            .frame(frame_name)
            .ok_or_else(|| FrameBankError::UnknownFrame(frame_name.to_owned()))?
            .id
            .clone();
        let key = (lemma.to_owned(), pos, frame_id.clone());
        if self.lu_index.contains_key(&key) {
            return Err(FrameBankError::Duplicate(format!(
                "LU {lemma}.{pos} in frame {frame_name}"
            )));
        }
        let lu = LexicalUnit {
            id: LuId(self.lus.len() as u32 + 1),
            lemma: lemma.to_owned(),
            pos,
            frame_id,
            provenance,
        };
        self.lu_index.insert(key, self.lus.len());
        self.lus.push(lu.clone());
        Ok(lu)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn lus(&self) -> &[LexicalUnit] {
        &self.lus
    }

    pub fn frame(&self, name: &str) -> Option<&Frame> {
        self.by_name.get(name).map(|&i| &self.frames[i])
    }

    pub fn frame_by_id(&self, id: &str) -> Option<&Frame> {
        self.by_id.get(id).map(|&i| &self.frames[i])
    }

    pub fn lu(&self, id: LuId) -> Option<&LexicalUnit> {
        // Ids are dense and assigned in insertion order.
        let lu = self.lus.get((id.0 as usize).checked_sub(1)?)?;
        (lu.id == id).then_some(lu)
    }

    /// Frame evoked by a lexical unit.
    pub fn lu_frame(&self, id: LuId) -> Option<&Frame> {
        self.lu(id).and_then(|lu| self.frame_by_id(&lu.frame_id))
    }

    pub fn lookup_lu(&self, lemma: &str, pos: Upos, frame: &Frame) -> Option<&LexicalUnit> {
        let key = (lemma.to_owned(), pos, frame.id.clone());
        self.lu_index.get(&key).map(|&i| &self.lus[i])
    }

    /// Returns the LU for the triple, creating an `AUTO_CREATED` one if absent.
    pub fn ensure_lu(
        &mut self,
        lemma: &str,
        pos: Upos,
        frame_name: &str,
    ) -> Result<LexicalUnit, FrameBankError> {
        let frame = self
            .frame(frame_name)
            .ok_or_else(|| FrameBankError::UnknownFrame(frame_name.to_owned()))?;
        if let Some(lu) = self.lookup_lu(lemma, pos, frame) {
            return Ok(lu.clone());
        }
        self.add_lu(lemma, pos, frame_name, LuProvenance::AutoCreated)
    }

    /// Case-insensitive frame search. Frames evoked by an LU whose lemma
    /// equals the query rank first, then frames whose name contains it.
    pub fn search_frames(&self, query: &str) -> Vec<&Frame> {
        let needle = query.to_lowercase();
        let mut evoked: BTreeSet<usize> = BTreeSet::new();
        for lu in &self.lus {
            if lu.lemma.to_lowercase() == needle {
                if let Some(&i) = self.by_id.get(&lu.frame_id) {
                    evoked.insert(i);
                }
            }
        }
        let mut hits: Vec<&Frame> = evoked.iter().map(|&i| &self.frames[i]).collect();
        hits.extend(
            self.frames
                .iter()
                .enumerate()
                .filter(|(i, f)| !evoked.contains(i) && f.name.to_lowercase().contains(&needle))
                .map(|(_, f)| f),
        );
        hits
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), serde_json::Error> {
        serde_json::to_writer_pretty(writer, &self.to_raw())
    }

    fn to_raw(&self) -> RawBank {
        RawBank {
            frames: self
                .frames
                .iter()
                .map(|f| RawFrame {
                    id: (f.id != f.name).then(|| f.id.clone()),
                    name: f.name.clone(),
                    definition: f.definition.clone(),
                    fes: f.fes.clone(),
                    excludes: f
                        .excludes
                        .iter()
                        .map(|p| [p.first().to_owned(), p.second().to_owned()])
                        .collect(),
                    core_sets: f
                        .core_sets
                        .iter()
                        .map(|s| s.iter().cloned().collect())
                        .collect(),
                })
                .collect(),
            lus: self
                .lus
                .iter()
                .map(|lu| RawLu {
                    lemma: lu.lemma.clone(),
                    pos: lu.pos,
                    frame: self
                        .frame_by_id(&lu.frame_id)
                        .map(|f| f.name.clone())
                        .unwrap_or_else(|| lu.frame_id.clone()),
                    provenance: lu.provenance,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawBank {
    frames: Vec<RawFrame>,
    #[serde(default)]
    lus: Vec<RawLu>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawFrame {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    name: String,
    #[serde(default)]
    definition: String,
    fes: Vec<FrameElement>,
    #[serde(default)]
    excludes: Vec<[String; 2]>,
    #[serde(default)]
    core_sets: Vec<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawLu {
    lemma: String,
    pos: Upos,
    frame: String,
    #[serde(default)]
    provenance: LuProvenance,
}

/// Parses and validates a frame bank in its JSON interchange format.
pub fn load_framebank<R: Read>(source: R) -> Result<FrameBank, FrameBankError> {
    let raw: RawBank =
        serde_json::from_reader(source).map_err(|e| FrameBankError::Schema(e.to_string()))?;
    let mut bank = FrameBank::new();
    for f in raw.frames {
        let frame = Frame::new(
            f.id,
            f.name,
            f.definition,
            f.fes,
            f.excludes.into_iter().map(|[a, b]| (a, b)),
            f.core_sets,
        )?;
        bank.add_frame(frame)?;
    }
    for lu in raw.lus {
        bank.add_lu(&lu.lemma, lu.pos, &lu.frame, lu.provenance)
            .map_err(|e| match e {
                FrameBankError::UnknownFrame(f) => FrameBankError::DanglingRef {
                    frame: f,
                    fe: format!("(LU {})", lu.lemma),
                },
                other => other,
            })?;
    }
    Ok(bank)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn fe(name: &str, core: bool) -> FrameElement {
        FrameElement {
            name: name.to_owned(),
            coreness: if core { Coreness::Core } else { Coreness::NonCore },
            definition: String::new(),
        }
    }

    pub fn self_motion() -> Frame {
        let fes = ["Self_mover", "Area", "Direction", "Goal", "Path", "Source"]
            .iter()
            .map(|n| fe(n, true))
            .chain([fe("Manner", false), fe("Time", false)])
            .collect();
        let excludes = ["Direction", "Goal", "Path", "Source"]
            .iter()
            .map(|o| ("Area".to_owned(), o.to_string()));
        let core_sets = vec![["Source", "Goal", "Path", "Direction"]
            .iter()
            .map(|s| s.to_string())
            .collect()];
        Frame::new(None, "Self_motion", "", fes, excludes, core_sets).unwrap()
    }

    pub fn motion() -> Frame {
        let fes = vec![fe("Theme", true), fe("Goal", true), fe("Source", true)];
        Frame::new(None, "Motion", "", fes, vec![], vec![]).unwrap()
    }

    pub fn bank() -> FrameBank {
        let mut bank = FrameBank::new();
        bank.add_frame(self_motion()).unwrap();
        bank.add_frame(motion()).unwrap();
        bank
    }
}
