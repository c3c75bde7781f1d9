mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::*;
use fw_core::corpus::write_corpus;
use fw_core::preannot::resolve_all;
use fw_core::store::records::{export_condition, load_annotation_records};
use fw_core::store::workspace::{ImportKind, Workspace};
use fw_core::{ConditionLabel, EditAction, EditEvent};

struct Files {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Files {
    fn new() -> Files {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_owned();
        let mut fb = Vec::new();
        bank().write_json(&mut fb).unwrap();
        fs::write(root.join("fb.json"), fb).unwrap();
        let mut corpus_bytes = Vec::new();
        write_corpus(&corpus(), &mut corpus_bytes).unwrap();
        fs::write(root.join("corpus.jsonl"), corpus_bytes).unwrap();
        fs::write(root.join("pre.jsonl"), jsonl(&hypotheses())).unwrap();
        Files { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn workspace(&self) -> Workspace {
        let ws = Workspace::open(self.path("data")).unwrap();
        for (kind, file) in [
            (ImportKind::Framebank, "fb.json"),
            (ImportKind::Corpus, "corpus.jsonl"),
            (ImportKind::Preannot, "pre.jsonl"),
        ] {
            ws.import(kind, &self.path(file)).unwrap();
        }
        ws
    }
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> String {
    items.iter().map(|h| serde_json::to_string(h).unwrap() + "\n").collect()
}

fn accept_first(ws: &Workspace) {
    let mut store = ws.load_store().unwrap();
    let set = store.snapshot().machine_human.iter().next().unwrap().clone();
    let lease = store.acquire_lease(&set.document_id, "ann1", at(0)).unwrap();
    store
        .append(EditEvent::new(set.id, "ann1", EditAction::Accept, at(1)), &lease.token, None, at(1))
        .unwrap();
}

#[test]
fn workspace_matches_direct_resolution() {
    let files = Files::new();
    let ws = files.workspace();
    let summary = ws.resolve().unwrap();

    let mut bank = bank();
    let direct = resolve_all(&hypotheses(), &corpus(), &mut bank, 1);
    assert_eq!(summary.created, direct.sets.len());
    assert_eq!(summary.warnings, direct.warning_tally());

    let (base, _) = ws.base().unwrap();
    let machine: Vec<_> = base.machine.iter().cloned().collect();
    assert_eq!(machine, direct.sets);
    assert_eq!(base.bank.lus(), bank.lus());
}

#[test]
fn base_requires_resolve_and_fresh_inputs() {
    let files = Files::new();
    let ws = files.workspace();
    assert_eq!(ws.base().unwrap_err().code(), "MISSING_PREREQUISITE");
    ws.resolve().unwrap();
    assert!(ws.base().is_ok());

    // New parser output makes the resolution stale.
    fs::write(files.path("pre2.jsonl"), jsonl(&hypotheses()[..2])).unwrap();
    ws.import(ImportKind::Preannot, &files.path("pre2.jsonl")).unwrap();
    assert_eq!(ws.base().unwrap_err().code(), "MISSING_PREREQUISITE");
    assert_eq!(ws.resolve().unwrap().created, 2);
}

#[test]
fn changing_inputs_after_review_started_conflicts() {
    let files = Files::new();
    let ws = files.workspace();
    ws.resolve().unwrap();
    accept_first(&ws);
    // Resolving the same inputs again is fine.
    ws.resolve().unwrap();

    fs::write(files.path("pre2.jsonl"), jsonl(&hypotheses()[..2])).unwrap();
    ws.import(ImportKind::Preannot, &files.path("pre2.jsonl")).unwrap();
    assert_eq!(ws.resolve().unwrap_err().code(), "CONFLICT");
}

#[test]
fn reimport_of_identical_content_is_a_no_op() {
    let files = Files::new();
    let ws = files.workspace();
    let again = ws.import(ImportKind::Corpus, &files.path("corpus.jsonl")).unwrap();
    assert!(again.unchanged);
    assert_eq!(
        again.counts,
        [("documents".to_owned(), 2), ("sentences".to_owned(), 3), ("tokens".to_owned(), 13)]
    );
}

#[test]
fn schema_errors_leave_previous_import_in_place() {
    let files = Files::new();
    let ws = files.workspace();
    fs::write(files.path("bad.jsonl"), "{\"sentence_id\": 3}\n").unwrap();
    let err = ws.import(ImportKind::Preannot, &files.path("bad.jsonl")).unwrap_err();
    assert_eq!(err.code(), "SCHEMA");
    assert!(err.to_string().contains("line 1"), "{err}");
    ws.resolve().unwrap();
}

#[test]
fn exported_human_condition_round_trips() {
    let files = Files::new();
    let ws = files.workspace();
    ws.resolve().unwrap();
    accept_first(&ws);

    // Export the reviewed sets, then import them as a human condition.
    let store = ws.load_store().unwrap();
    let snap = store.snapshot();
    let mut out = Vec::new();
    let n = export_condition(&snap.machine_human, &snap.bank, &mut out).unwrap();
    assert_eq!(n, snap.machine_human.len());
    fs::write(files.path("human.jsonl"), &out).unwrap();
    assert_eq!(load_annotation_records(out.as_slice()).unwrap().len(), n);

    let other = Files::new();
    let ws2 = other.workspace();
    ws2.import(ImportKind::Annotations, &files.path("human.jsonl")).unwrap();
    let summary = ws2.resolve().unwrap();
    assert_eq!(summary.human_sets, n);
    let (base, _) = ws2.base().unwrap();
    let content = |c: &fw_core::Condition| c.iter().map(|s| (s.sentence_id.clone(), s.frame.clone(), s.target_span)).collect::<Vec<_>>();
    assert_eq!(content(&base.human), content(&snap.machine_human));
    assert!(base.condition(ConditionLabel::Human).is_frozen());
}

#[test]
fn events_live_next_to_the_inputs() {
    let files = Files::new();
    let ws = files.workspace();
    ws.resolve().unwrap();
    accept_first(&ws);
    assert_eq!(ws.events_path().parent(), Some(Path::new(&files.path("data"))));
    assert_eq!(ws.load_store().unwrap().log().len(), 1);
}
