//! On-disk data directory: imported inputs (content-addressed), the
//! resolution marker and the event log.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::log::EventLog;
use super::records::load_annotation_records;
use super::{Snapshot, Store, StoreError};
use crate::corpus::load_corpus;
use crate::framebank::{load_framebank, FrameBank};
use crate::preannot::{load_preannotation, BatchResolution, WarningCode};

const MANIFEST: &str = "imports.json";
const RESOLUTION: &str = "resolution.json";
const EVENTS: &str = "events.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportKind {
    Framebank,
    Corpus,
    Preannot,
    Annotations,
}

impl ImportKind {
    pub const ALL: [ImportKind; 4] = [
        ImportKind::Framebank,
        ImportKind::Corpus,
        ImportKind::Preannot,
        ImportKind::Annotations,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ImportKind::Framebank => "framebank",
            ImportKind::Corpus => "corpus",
            ImportKind::Preannot => "preannot",
            ImportKind::Annotations => "annotations",
        }
    }

    fn file_name(self) -> &'static str {
        match self {
            ImportKind::Framebank => "framebank.json",
            ImportKind::Corpus => "corpus.jsonl",
            ImportKind::Preannot => "preannot.jsonl",
            ImportKind::Annotations => "annotations.jsonl",
        }
    }
}

impl fmt::Display for ImportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ImportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ImportKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown import kind {s:?}"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WorkspaceError {
    #[error("{kind}: {message}")]
    Schema { kind: ImportKind, message: String },
    #[error("missing prerequisite: {0}")]
    MissingPrerequisite(String),
    #[error("{0}")]
    Conflict(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WorkspaceError {
    pub fn code(&self) -> &'static str {
        match self {
            WorkspaceError::Schema { .. } => "SCHEMA",
            WorkspaceError::MissingPrerequisite(_) => "MISSING_PREREQUISITE",
            WorkspaceError::Conflict(_) => "CONFLICT",
            WorkspaceError::Store(e) => e.code(),
            WorkspaceError::Io(_) => "IO",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ManifestEntry {
    sha256: String,
    source: String,
    counts: Vec<(String, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Manifest {
    imports: BTreeMap<ImportKind, ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportSummary {
    pub kind: ImportKind,
    pub sha256: String,
    /// True when identical content had already been imported.
    pub unchanged: bool,
    pub counts: Vec<(String, usize)>,
}

impl fmt::Display for ImportSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, n) in &self.counts {
            writeln!(f, "{name}: {n}")?;
        }
        if self.unchanged {
            writeln!(f, "(already imported, sha256 {})", &self.sha256[..12])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveSummary {
    pub inputs: BTreeMap<ImportKind, String>,
    pub created: usize,
    pub warnings: BTreeMap<WarningCode, usize>,
    pub auto_created_lus: usize,
    pub human_sets: usize,
}

impl ResolveSummary {
    fn new(inputs: BTreeMap<ImportKind, String>, base: &Snapshot, resolution: &BatchResolution, pristine: &FrameBank) -> Self {
        ResolveSummary {
            inputs,
            created: resolution.sets.len(),
            warnings: resolution.warning_tally(),
            auto_created_lus: base.bank.lus().len() - pristine.lus().len(),
            human_sets: base.human.len(),
        }
    }
}

impl fmt::Display for ResolveSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "created: {}, warnings: ", self.created)?;
        if self.warnings.is_empty() {
            writeln!(f, "0")?;
        } else {
            let parts: Vec<String> = self.warnings.iter().map(|(c, n)| format!("{n} {c}")).collect();
            writeln!(f, "{}", parts.join(", "))?;
        }
        writeln!(f, "auto-created LUs: {}", self.auto_created_lus)?;
        writeln!(f, "human annotation sets: {}", self.human_sets)
    }
}

#[derive(Debug, Clone)]
pub struct Workspace {
    dir: PathBuf,
}

impl Workspace {
    /// Opens a data directory, creating it if needed.
    pub fn open(dir: impl AsRef<Path>) -> Result<Workspace, WorkspaceError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(Workspace { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn events_path(&self) -> PathBuf {
        self.dir.join(EVENTS)
    }

    fn manifest(&self) -> Result<Manifest, WorkspaceError> {
        read_json(&self.dir.join(MANIFEST)).map(Option::unwrap_or_default)
    }

    /// Validates `path` as `kind` and stores a copy. Re-importing identical
    /// content is a no-op that reports the same counts.
    pub fn import(&self, kind: ImportKind, path: &Path) -> Result<ImportSummary, WorkspaceError> {
        let bytes = fs::read(path)?;
        let sha256 = hex::encode(Sha256::digest(&bytes));
        let mut manifest = self.manifest()?;
        if let Some(entry) = manifest.imports.get(&kind) {
            if entry.sha256 == sha256 {
                return Ok(ImportSummary {
                    kind,
                    sha256,
                    unchanged: true,
                    counts: entry.counts.clone(),
                });
            }
        }
        let counts = validate(kind, &bytes)?;
        write_atomic(&self.dir.join(kind.file_name()), &bytes)?;
        manifest.imports.insert(
            kind,
            ManifestEntry {
                sha256: sha256.clone(),
                source: path.display().to_string(),
                counts: counts.clone(),
            },
        );
        write_atomic(&self.dir.join(MANIFEST), &serde_json::to_vec_pretty(&manifest).expect("manifest serializes"))?;
        Ok(ImportSummary {
            kind,
            sha256,
            unchanged: false,
            counts,
        })
    }

    fn input_hashes(&self) -> Result<BTreeMap<ImportKind, String>, WorkspaceError> {
        let manifest = self.manifest()?;
        for kind in [ImportKind::Framebank, ImportKind::Corpus, ImportKind::Preannot] {
            if !manifest.imports.contains_key(&kind) {
                return Err(WorkspaceError::MissingPrerequisite(format!("no {kind} imported")));
            }
        }
        Ok(manifest.imports.into_iter().map(|(k, e)| (k, e.sha256)).collect())
    }

    fn build(&self) -> Result<(Snapshot, BatchResolution, FrameBank), WorkspaceError> {
        let read = |kind: ImportKind| fs::File::open(self.dir.join(kind.file_name())).map(BufReader::new);
        let schema = |kind: ImportKind| move |e: &dyn fmt::Display| WorkspaceError::Schema { kind, message: e.to_string() };

        let bank = load_framebank(read(ImportKind::Framebank)?).map_err(|e| schema(ImportKind::Framebank)(&e))?;
        let corpus = load_corpus(read(ImportKind::Corpus)?).map_err(|e| schema(ImportKind::Corpus)(&e))?;
        let hypotheses = load_preannotation(read(ImportKind::Preannot)?).map_err(|e| schema(ImportKind::Preannot)(&e))?;
        let human = match read(ImportKind::Annotations) {
            Ok(r) => load_annotation_records(r).map_err(|e| schema(ImportKind::Annotations)(&e))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let (snapshot, resolution) =
            Snapshot::build(bank.clone(), corpus, &hypotheses, &human).map_err(|e| match e {
                StoreError::Record(r) => schema(ImportKind::Annotations)(&r),
                other => other.into(),
            })?;
        Ok((snapshot, resolution, bank))
    }

    /// Resolves all hypotheses into the machine and machine+human seed
    /// conditions. Resolution always starts from the imported frame bank,
    /// so reruns create the same LUs and the same output.
    pub fn resolve(&self) -> Result<ResolveSummary, WorkspaceError> {
        let inputs = self.input_hashes()?;
        let marker = self.dir.join(RESOLUTION);
        if let Some(previous) = read_json::<ResolveSummary>(&marker)? {
            let has_events = fs::metadata(self.events_path()).is_ok_and(|m| m.len() > 0);
            if previous.inputs != inputs && has_events {
                return Err(WorkspaceError::Conflict(
                    "inputs changed after review started; move events.jsonl aside to resolve again".into(),
                ));
            }
        }
        let (base, resolution, pristine) = self.build()?;
        let summary = ResolveSummary::new(inputs, &base, &resolution, &pristine);
        write_atomic(&marker, &serde_json::to_vec_pretty(&summary).expect("summary serializes"))?;
        Ok(summary)
    }

    /// The resolved base state, without the event log.
    pub fn base(&self) -> Result<(Snapshot, ResolveSummary), WorkspaceError> {
        let inputs = self.input_hashes()?;
        let summary: ResolveSummary = read_json(&self.dir.join(RESOLUTION))?
            .ok_or_else(|| WorkspaceError::MissingPrerequisite("run resolve first".into()))?;
        if summary.inputs != inputs {
            return Err(WorkspaceError::MissingPrerequisite(
                "inputs changed since the last resolve; run resolve again".into(),
            ));
        }
        let (base, _, _) = self.build()?;
        Ok((base, summary))
    }

    pub fn load_store(&self) -> Result<Store, WorkspaceError> {
        let (base, _) = self.base()?;
        let log = EventLog::open(self.events_path())?;
        Ok(Store::open(base, log)?)
    }
}

fn validate(kind: ImportKind, bytes: &[u8]) -> Result<Vec<(String, usize)>, WorkspaceError> {
    let schema = |message: String| WorkspaceError::Schema { kind, message };
    let counts = match kind {
        ImportKind::Framebank => {
            let bank = load_framebank(bytes).map_err(|e| schema(e.to_string()))?;
            vec![
                ("frames".to_owned(), bank.frames().len()),
                ("fes".to_owned(), bank.frames().iter().map(|f| f.fes.len()).sum()),
                ("lus".to_owned(), bank.lus().len()),
            ]
        }
        ImportKind::Corpus => {
            let docs = load_corpus(bytes).map_err(|e| schema(e.to_string()))?;
            vec![
                ("documents".to_owned(), docs.len()),
                ("sentences".to_owned(), docs.iter().map(|d| d.sentences.len()).sum()),
                ("tokens".to_owned(), docs.iter().map(|d| d.token_count()).sum()),
            ]
        }
        ImportKind::Preannot => {
            let h = load_preannotation(bytes).map_err(|e| schema(e.to_string()))?;
            vec![("hypotheses".to_owned(), h.len())]
        }
        ImportKind::Annotations => {
            let r = load_annotation_records(bytes).map_err(|e| schema(e.to_string()))?;
            vec![("annotation sets".to_owned(), r.len())]
        }
    };
    Ok(counts)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>, WorkspaceError> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| WorkspaceError::Conflict(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::File::open(&tmp)?.sync_all()?;
    fs::rename(tmp, path)
}
