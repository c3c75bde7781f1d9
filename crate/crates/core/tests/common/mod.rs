//! Fixtures and independent oracles shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::{DateTime, TimeZone, Utc};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use fw_core::corpus::{Document, Sentence, Span, Token};
use fw_core::framebank::{Coreness, Frame, FrameBank, FrameElement};
use fw_core::preannot::{FeSpan, ParserHypothesis};
use fw_core::review::{EditAction, EditEvent, NiKind};
use fw_core::store::{EventLog, Snapshot, Store};
use fw_core::{AsId, Upos};

pub fn at(secs: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(1_700_000_000 + secs, 0).unwrap()
}

pub fn fe(name: &str, core: bool) -> FrameElement {
    FrameElement {
        name: name.to_owned(),
        coreness: if core { Coreness::Core } else { Coreness::NonCore },
        definition: String::new(),
    }
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

pub fn self_motion() -> Frame {
    let fes = ["Self_mover", "Area", "Direction", "Goal", "Path", "Source"]
        .iter()
        .map(|n| fe(n, true))
        .chain([fe("Manner", false), fe("Time", false)])
        .collect();
    let excludes = ["Direction", "Goal", "Path", "Source"].map(|o| ("Area".to_owned(), o.to_owned()));
    let core_sets = vec![strings(&["Source", "Goal", "Path", "Direction"])];
    Frame::new(None, "Self_motion", "", fes, excludes, core_sets).unwrap()
}

pub fn bank() -> FrameBank {
    let mut bank = FrameBank::new();
    bank.add_frame(self_motion()).unwrap();
    let motion = Frame::new(
        None,
        "Motion",
        "",
        vec![fe("Theme", true), fe("Goal", true), fe("Source", true), fe("Manner", false)],
        vec![],
        vec![],
    )
    .unwrap();
    bank.add_frame(motion).unwrap();
    let building = Frame::new(None, "Buildings", "", vec![fe("Building", true), fe("Place", false)], vec![], vec![]).unwrap();
    bank.add_frame(building).unwrap();
    bank
}

/// A sentence of space-separated `(form, lemma, upos)` words.
pub fn sentence(doc: &str, id: &str, words: &[(&str, &str, Upos)]) -> Sentence {
    let mut text = String::new();
    let mut tokens = Vec::new();
    for (i, (form, lemma, upos)) in words.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        let start = text.chars().count();
        text.push_str(form);
        tokens.push(Token {
            index: i + 1,
            form: form.to_string(),
            lemma: lemma.to_string(),
            upos: *upos,
            span: Span::new(start, start + form.chars().count()),
        });
    }
    Sentence {
        id: id.to_owned(),
        document_id: doc.to_owned(),
        text,
        tokens,
    }
}

/// Three sentences over two documents.
pub fn corpus() -> Vec<Document> {
    use Upos::*;
    let s1 = sentence(
        "d1",
        "d1_s1",
        &[("Mark", "Mark", Propn), ("correu", "correr", Verb), ("para", "para", Adp), ("casa", "casa", Noun)],
    );
    let s2 = sentence(
        "d1",
        "d1_s2",
        &[("Ana", "Ana", Propn), ("andou", "andar", Verb), ("pelo", "por", Adp), ("parque", "parque", Noun)],
    );
    let s3 = sentence(
        "d2",
        "d2_s1",
        &[("O", "o", Det), ("barco", "barco", Noun), ("chegou", "chegar", Verb), ("ao", "a", Adp), ("porto", "porto", Noun)],
    );
    vec![
        Document {
            id: "d1".into(),
            title: "first".into(),
            sentences: vec![s1, s2],
        },
        Document {
            id: "d2".into(),
            title: "second".into(),
            sentences: vec![s3],
        },
    ]
}

fn hypothesis(sentence: &str, target: (usize, usize), frame: &str, fes: &[(&str, usize, usize)]) -> ParserHypothesis {
    ParserHypothesis {
        sentence_id: sentence.into(),
        target_span: Span::new(target.0, target.1),
        frame_name: frame.into(),
        fe_spans: fes
            .iter()
            .map(|&(name, s, e)| FeSpan {
                fe_name: name.into(),
                span: Span::new(s, e),
            })
            .collect(),
    }
}

/// Six hypotheses over [`corpus`]: one names an unknown frame and one an FE
/// the frame does not have. Five annotation sets survive.
pub fn hypotheses() -> Vec<ParserHypothesis> {
    vec![
        hypothesis("d1_s1", (5, 11), "Self_motion", &[("Self_mover", 0, 4), ("Goal", 12, 21)]),
        hypothesis("d1_s1", (17, 21), "Buildings", &[("Building", 17, 21)]),
        hypothesis("d1_s2", (4, 9), "Self_motion", &[("Self_mover", 0, 3), ("Paht", 10, 21)]),
        hypothesis("d1_s2", (15, 21), "Parks", &[]),
        hypothesis("d2_s1", (8, 14), "Motion", &[("Theme", 0, 7), ("Goal", 15, 23)]),
        hypothesis("d2_s1", (2, 7), "Motion", &[]),
    ]
}

pub fn base() -> Snapshot {
    Snapshot::build(bank(), corpus(), &hypotheses(), &[]).unwrap().0
}

// ---------------------------------------------------------------------------
// Minimal core requirement oracle

/// True when annotating `chosen` completes the frame: every core FE is
/// chosen, excluded by a chosen FE, or shares a core set with one.
pub fn covers(frame: &Frame, chosen: &BTreeSet<String>) -> bool {
    let core: Vec<&str> = frame.fes.iter().filter(|f| f.is_core()).map(|f| f.name.as_str()).collect();
    core.iter().all(|&fe| {
        chosen.contains(fe)
            || frame.excludes.iter().any(|p| {
                (p.first() == fe && chosen.contains(p.second())) || (p.second() == fe && chosen.contains(p.first()))
            })
            || frame
                .core_sets
                .iter()
                .any(|set| set.contains(fe) && set.iter().any(|m| chosen.contains(m)))
    })
}

/// Size of the smallest covering subset, found by trying every subset.
pub fn oracle_min_requirement(frame: &Frame) -> usize {
    let core: Vec<String> = frame.fes.iter().filter(|f| f.is_core()).map(|f| f.name.clone()).collect();
    let mut best = core.len();
    for mask in 0u32..(1 << core.len()) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let chosen: BTreeSet<String> = (0..core.len()).filter(|i| mask & (1 << i) != 0).map(|i| core[i].clone()).collect();
        if covers(frame, &chosen) {
            best = size;
        }
    }
    best
}

/// A frame with up to `max_core` core FEs and random excludes and core sets.
pub fn random_frame(rng: &mut StdRng, max_core: usize) -> Frame {
    let n = rng.gen_range(0..=max_core);
    let names: Vec<String> = (0..n).map(|i| format!("C{i}")).collect();
    let mut fes: Vec<FrameElement> = names.iter().map(|n| fe(n, true)).collect();
    for i in 0..rng.gen_range(0..3) {
        fes.push(fe(&format!("N{i}"), false));
    }
    let density: f64 = rng.gen_range(0.0..0.4);
    let mut excludes = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                excludes.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    let mut core_sets = Vec::new();
    if n >= 2 {
        for _ in 0..rng.gen_range(0..3) {
            let k = rng.gen_range(2..=n.min(4));
            core_sets.push(names.choose_multiple(rng, k).cloned().collect());
        }
    }
    Frame::new(None, "Random", "", fes, excludes, core_sets).unwrap()
}

// ---------------------------------------------------------------------------
// Status precedence oracle

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Deleted,
    Created,
    Updated,
    Accepted,
    Untouched,
}

/// Declared precedence, written out independently of the library.
pub fn expected_status(actions: &[EditAction]) -> Expected {
    let first = actions
        .iter()
        .find(|a| !matches!(a, EditAction::TimerStart | EditAction::TimerStop));
    if actions.iter().any(|a| matches!(a, EditAction::Delete)) {
        Expected::Deleted
    } else if matches!(first, Some(EditAction::Create { .. })) {
        Expected::Created
    } else if actions.iter().any(|a| {
        matches!(
            a,
            EditAction::ReplaceFrame { .. } | EditAction::AddFe { .. } | EditAction::RemoveFe { .. } | EditAction::SetNi { .. }
        )
    }) {
        Expected::Updated
    } else if actions.iter().any(|a| matches!(a, EditAction::Accept)) {
        Expected::Accepted
    } else {
        Expected::Untouched
    }
}

const FE_NAMES: [&str; 9] = ["Self_mover", "Area", "Goal", "Source", "Path", "Theme", "Building", "Manner", "Bogus"];
const FRAMES: [&str; 4] = ["Self_motion", "Motion", "Buildings", "Nope"];

fn random_span(rng: &mut StdRng, len: usize) -> Span {
    let start = rng.gen_range(0..len);
    Span::new(start, rng.gen_range(start..=len + 2))
}

/// A random, not necessarily valid, edit for set `id` in a sentence of
/// `len` characters.
pub fn random_action(rng: &mut StdRng, len: usize) -> EditAction {
    match rng.gen_range(0..10) {
        0 | 1 => EditAction::Accept,
        2 => EditAction::Delete,
        3 => EditAction::ReplaceFrame {
            frame: FRAMES.choose(rng).unwrap().to_string(),
        },
        4 | 5 => EditAction::AddFe {
            fe: FE_NAMES.choose(rng).unwrap().to_string(),
            span: random_span(rng, len),
        },
        6 => EditAction::RemoveFe {
            fe: FE_NAMES.choose(rng).unwrap().to_string(),
        },
        7 => EditAction::SetNi {
            fe: FE_NAMES.choose(rng).unwrap().to_string(),
            ni: *[NiKind::Ini, NiKind::Dni, NiKind::Cni].choose(rng).unwrap(),
        },
        8 => EditAction::TimerStart,
        _ => EditAction::TimerStop,
    }
}

/// Drives a store through `attempts` random edits (about one in eight a
/// CREATE), keeping whatever the store accepts. Returns the store.
pub fn random_session(rng: &mut StdRng, attempts: usize, log: EventLog) -> Store {
    let base = base();
    let docs = corpus();
    let mut store = Store::open(base, log).unwrap();
    let mut tokens = std::collections::HashMap::new();
    for d in &docs {
        let lease = store.acquire_lease(&d.id, "ann1", at(0)).unwrap();
        tokens.insert(d.id.clone(), lease.token);
    }
    let sentences: Vec<&Sentence> = docs.iter().flat_map(|d| &d.sentences).collect();
    for step in 0..attempts {
        let now = at(step as i64 + 1);
        let snapshot = store.snapshot();
        let ids: Vec<AsId> = snapshot.machine_human.iter().map(|s| s.id).collect();
        let event = if ids.is_empty() || rng.gen_ratio(1, 8) {
            let s = sentences.choose(rng).unwrap();
            let token = s.tokens.choose(rng).unwrap();
            EditEvent::new(
                AsId(0),
                "ann1",
                EditAction::Create {
                    document_id: s.document_id.clone(),
                    sentence_id: s.id.clone(),
                    target: token.span,
                    frame: FRAMES.choose(rng).unwrap().to_string(),
                    lemma: token.lemma.clone(),
                    pos: token.upos,
                },
                now,
            )
        } else {
            let id = *ids.choose(rng).unwrap();
            let set = snapshot.machine_human.get(id).unwrap();
            let len = snapshot.corpus.sentence(&set.sentence_id).unwrap().len();
            EditEvent::new(id, "ann1", random_action(rng, len), now)
        };
        let doc = snapshot.document_of(&event).unwrap();
        let _ = store.append(event, &tokens[&doc], None, now);
    }
    store
}

// ---------------------------------------------------------------------------
// Per-document values transcribed from the published tables.

pub const DOCS: [&str; 12] = [
    "02_13", "02_14", "03_11", "03_12", "04_01", "04_06", "05_01", "05_02", "05_03", "07_02", "07_03", "07_07",
];

/// Table 1: (sentences, unique frames) for Human, Machine, Machine + Human.
pub const DIVERSITY: [[(usize, usize); 3]; 12] = [
    [(22, 71), (22, 53), (22, 80)],
    [(13, 71), (23, 56), (23, 105)],
    [(27, 77), (26, 56), (28, 88)],
    [(19, 47), (26, 57), (27, 85)],
    [(50, 114), (46, 87), (49, 99)],
    [(9, 34), (9, 20), (10, 26)],
    [(14, 54), (15, 26), (15, 51)],
    [(26, 80), (23, 54), (26, 93)],
    [(3, 12), (20, 59), (20, 83)],
    [(21, 97), (22, 58), (22, 104)],
    [(13, 80), (13, 46), (13, 75)],
    [(20, 78), (17, 60), (20, 82)],
];

/// Table 2: H vs M, H vs MH, M vs MH.
pub const COSINE: [[f64; 3]; 12] = [
    [0.7199, 0.7763, 0.8461],
    [0.6918, 0.8267, 0.8509],
    [0.5625, 0.7768, 0.6927],
    [0.6153, 0.7288, 0.7547],
    [0.5686, 0.6757, 0.8322],
    [0.5982, 0.7080, 0.7668],
    [0.6167, 0.7193, 0.7520],
    [0.6672, 0.7264, 0.8175],
    [0.6835, 0.7250, 0.9116],
    [0.6182, 0.7752, 0.7106],
    [0.6053, 0.7843, 0.7186],
    [0.6370, 0.7355, 0.7279],
];

/// Table 3: (core annotated, minimum required) per condition.
pub const COMPLETENESS: [[(usize, usize); 3]; 12] = [
    [(229, 246), (92, 244), (338, 299)],
    [(309, 301), (120, 352), (523, 491)],
    [(268, 296), (106, 267), (350, 384)],
    [(193, 248), (111, 360), (358, 412)],
    [(578, 624), (186, 543), (407, 567)],
    [(159, 128), (27, 99), (130, 152)],
    [(210, 194), (49, 132), (173, 213)],
    [(447, 332), (90, 296), (346, 428)],
    [(38, 29), (107, 291), (284, 314)],
    [(438, 400), (108, 321), (465, 386)],
    [(294, 308), (66, 197), (318, 284)],
    [(323, 312), (87, 248), (364, 314)],
];

/// Table 4: (sentences, average length, human minutes, machine + human minutes).
pub const TIME: [(usize, f64, f64, f64); 12] = [
    (20, 82.1, 9.36, 9.37),
    (14, 152.64, 19.01, 11.03),
    (26, 101.58, 4.57, 9.89),
    (21, 80.14, 2.76, 4.61),
    (43, 88.07, 19.17, 3.23),
    (7, 101.29, 16.15, 6.34),
    (13, 91.08, 26.91, 38.12),
    (26, 104.5, 23.6, 18.13),
    (3, 129.33, 20.45, 5.72),
    (20, 116.0, 13.61, 19.61),
    (13, 135.85, 13.77, 17.68),
    (19, 107.11, 10.19, 11.89),
];

/// Table 5 rows in printed order: (doc, accepted, created, deleted, updated, total).
pub const EDITS: [(&str, usize, usize, usize, usize, usize); 12] = [
    ("03_11", 7, 18, 64, 141, 230),
    ("03_12", 2, 18, 58, 150, 228),
    ("02_13", 0, 25, 15, 121, 161),
    ("02_14", 0, 18, 39, 219, 276),
    ("04_01", 20, 68, 59, 173, 320),
    ("04_06", 2, 4, 11, 63, 80),
    ("05_01", 24, 7, 10, 72, 113),
    ("05_02", 47, 5, 41, 129, 222),
    ("05_03", 27, 19, 10, 83, 139),
    ("07_02", 4, 8, 79, 162, 253),
    ("07_03", 2, 9, 54, 117, 182),
    ("07_07", 5, 11, 73, 140, 229),
];

/// Printed Table 5 percentages: accepted, created, deleted, updated.
pub const EDIT_PCTS: [[f64; 4]; 12] = [
    [3.04, 10.84, 27.83, 61.30],
    [0.88, 10.59, 25.44, 65.79],
    [0.00, 17.12, 9.32, 75.16],
    [0.00, 7.59, 14.13, 79.35],
    [6.25, 26.05, 18.44, 54.06],
    [2.50, 5.80, 13.75, 78.75],
    [21.24, 6.80, 8.85, 63.72],
    [21.17, 2.76, 18.47, 58.11],
    [19.42, 14.73, 7.19, 59.71],
    [1.58, 4.60, 31.23, 64.03],
    [1.10, 7.03, 29.67, 64.29],
    [2.18, 7.05, 31.88, 61.14],
];
