mod common;

use std::fs;
use std::io::Write;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::*;
use fw_core::review::{derive_status, Provenance};
use fw_core::store::{replay, EventLog, Store};
use fw_core::Status;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn file_log_reopens_to_the_live_snapshot(seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let mut rng = StdRng::seed_from_u64(seed);
        let live = random_session(&mut rng, 20, EventLog::open(&path).unwrap());
        let reopened = Store::open(base(), EventLog::open(&path).unwrap()).unwrap();
        prop_assert_eq!(&*reopened.snapshot(), &*live.snapshot());
        prop_assert_eq!(reopened.log().records(), live.log().records());
    }

    #[test]
    fn statuses_follow_each_sets_own_history(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let store = random_session(&mut rng, 40, EventLog::in_memory());
        let snap = store.snapshot();
        for set in snap.machine_human.iter() {
            let actions: Vec<_> = store
                .log()
                .records()
                .iter()
                .filter(|r| r.as_id == set.id)
                .map(|r| r.action.clone())
                .collect();
            let expected = match expected_status(&actions) {
                Expected::Deleted => Status::Deleted,
                Expected::Created => Status::Created,
                Expected::Updated => Status::Updated,
                Expected::Accepted => Status::Accepted,
                Expected::Untouched => Status::MachinePending,
            };
            prop_assert_eq!(set.status, expected);
            prop_assert_eq!(derive_status(set.kinds(), set.provenance), expected);
            if set.provenance == Provenance::Human {
                let created = matches!(actions.first(), Some(fw_core::EditAction::Create { .. }));
                prop_assert!(created, "human set {} without a leading CREATE", set.id);
            }
        }
        // The frozen machine copy never changes.
        prop_assert_eq!(&snap.machine, &store.base().machine);
    }

    #[test]
    fn every_prefix_replays(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let store = random_session(&mut rng, 15, EventLog::in_memory());
        let records = store.log().records();
        let mut running = store.base().clone();
        for (k, record) in records.iter().enumerate() {
            prop_assert_eq!(&replay(store.base(), records, k as u64).unwrap(), &running);
            running.apply(&record.event()).unwrap();
        }
        prop_assert_eq!(&running, &*store.snapshot());
    }
}

fn session_file(dir: &std::path::Path) -> (std::path::PathBuf, Vec<String>) {
    let path = dir.join("events.jsonl");
    let mut rng = StdRng::seed_from_u64(7);
    let store = random_session(&mut rng, 20, EventLog::open(&path).unwrap());
    assert!(store.log().len() >= 3);
    let lines = fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    (path, lines)
}

#[test]
fn torn_tail_is_dropped_and_appending_continues() {
    let dir = tempfile::tempdir().unwrap();
    let (path, lines) = session_file(dir.path());
    let last = lines.last().unwrap();
    let mut torn = lines[..lines.len() - 1].join("\n");
    torn.push('\n');
    torn.push_str(&last[..last.len() / 3]);
    fs::write(&path, torn).unwrap();

    let log = EventLog::open(&path).unwrap();
    assert_eq!(log.len(), lines.len() - 1);
    // The partial line is gone from disk as well.
    let on_disk = fs::read_to_string(&path).unwrap();
    assert_eq!(on_disk.lines().count(), lines.len() - 1);
    assert!(on_disk.ends_with('\n'));
}

#[test]
fn sequence_gap_is_a_corrupt_log() {
    let dir = tempfile::tempdir().unwrap();
    let (path, lines) = session_file(dir.path());
    let mut gapped: Vec<&str> = lines.iter().map(String::as_str).collect();
    gapped.remove(1);
    let mut f = fs::File::create(&path).unwrap();
    writeln!(f, "{}", gapped.join("\n")).unwrap();
    let err = EventLog::open(&path).unwrap_err();
    assert_eq!(err.code(), "CORRUPT_LOG");
}

#[test]
fn garbage_in_the_middle_is_a_corrupt_log() {
    let dir = tempfile::tempdir().unwrap();
    let (path, mut lines) = session_file(dir.path());
    lines[1] = "{not json".into();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert_eq!(EventLog::open(&path).unwrap_err().code(), "CORRUPT_LOG");
}
