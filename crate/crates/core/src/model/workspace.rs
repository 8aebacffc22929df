//! On-disk workspace: one canonical JSON file per model, patch, transcript
//! and report, plus `lineage.json` written last as the commit point.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::canonical::{content_id, to_canonical_string, versioned, SCHEMA_VERSION};
use super::lineage::{Lineage, LineageError};
use super::patch::ModelPatch;
use super::types::ModelHypothesis;
use crate::bench::SuccessReport;
use crate::hrrt::Transcript;

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("i/o failure on {path}: {source}")]
    IoFailure { path: PathBuf, source: std::io::Error },
    #[error("{path}: expected schema_version {SCHEMA_VERSION}, found {found}")]
    SchemaVersionMismatch { path: PathBuf, found: String },
    #[error("{path}: {message}")]
    ParseFailure { path: PathBuf, message: String },
    #[error("lineage integrity: {0}")]
    Integrity(#[from] LineageError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::IoFailure { path: path.to_path_buf(), source }
}

/// Everything persisted in a workspace directory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Workspace {
    pub lineage: Lineage,
    /// Transcripts keyed by `<hypothesis-id>.<level>` of the analysis that produced them.
    pub transcripts: BTreeMap<String, Transcript>,
    /// Benchmark reports keyed by batch id.
    pub reports: BTreeMap<String, SuccessReport>,
}

static WRITES: AtomicUsize = AtomicUsize::new(0);

/// Crash-injection hook for tests: when `HRRT_CRASH_AFTER_WRITES=n` is set the
/// process exits abruptly once `n` atomic writes have completed.
fn crash_point() {
    let done = WRITES.fetch_add(1, Ordering::SeqCst) + 1;
    if let Ok(v) = std::env::var("HRRT_CRASH_AFTER_WRITES") {
        if v.parse::<usize>().ok() == Some(done) {
            std::process::exit(137);
        }
    }
}

/// Writes `contents` to a sibling temp file, syncs it and renames it over `path`.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<(), WorkspaceError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(contents).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))?;
    crash_point();
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct LineageFile {
    schema_version: u32,
    parents: BTreeMap<String, Option<String>>,
    #[serde(default)]
    transcripts: Vec<String>,
    #[serde(default)]
    reports: Vec<String>,
}

fn read_versioned<T: DeserializeOwned>(path: &Path, key: &str) -> Result<T, WorkspaceError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| WorkspaceError::ParseFailure { path: path.to_path_buf(), message: e.to_string() })?;
    check_version(path, &value)?;
    let inner = value
        .get(key)
        .cloned()
        .ok_or_else(|| WorkspaceError::ParseFailure { path: path.to_path_buf(), message: format!("missing `{key}`") })?;
    serde_json::from_value(inner)
        .map_err(|e| WorkspaceError::ParseFailure { path: path.to_path_buf(), message: e.to_string() })
}

fn check_version(path: &Path, value: &serde_json::Value) -> Result<(), WorkspaceError> {
    match value.get("schema_version") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => Ok(()),
        other => Err(WorkspaceError::SchemaVersionMismatch {
            path: path.to_path_buf(),
            found: other.map(|v| v.to_string()).unwrap_or_else(|| "nothing".into()),
        }),
    }
}

pub fn model_path(root: &Path, id: &str) -> PathBuf {
    root.join("models").join(format!("{id}.model.json"))
}

pub fn patch_path(root: &Path, id: &str) -> PathBuf {
    root.join("patches").join(format!("{id}.patch.json"))
}

pub fn transcript_path(root: &Path, key: &str) -> PathBuf {
    root.join("transcripts").join(format!("{key}.transcript.json"))
}

pub fn report_dir(root: &Path, batch: &str) -> PathBuf {
    root.join("reports").join(batch)
}

pub fn write_model(root: &Path, h: &ModelHypothesis) -> Result<(), WorkspaceError> {
    atomic_write(&model_path(root, &h.id), to_canonical_string(&versioned("model", h)).as_bytes())
}

pub fn read_model(path: &Path) -> Result<ModelHypothesis, WorkspaceError> {
    let h: ModelHypothesis = read_versioned(path, "model")?;
    if content_id(&h) != h.id {
        return Err(WorkspaceError::ParseFailure {
            path: path.to_path_buf(),
            message: format!("content hash does not match id {}", h.id),
        });
    }
    Ok(h)
}

fn read_patch(path: &Path) -> Result<ModelPatch, WorkspaceError> {
    read_versioned(path, "patch")
}

/// Writes every file of the workspace, `lineage.json` last.
pub fn save_workspace(ws: &Workspace, root: &Path) -> Result<(), WorkspaceError> {
    fs::create_dir_all(root).map_err(io_err(root))?;
    for h in ws.lineage.hypotheses.values() {
        let path = model_path(root, &h.id);
        if !path.exists() {
            write_model(root, h)?;
        }
    }
    for (id, p) in &ws.lineage.patches {
        let path = patch_path(root, id);
        if !path.exists() {
            atomic_write(&path, to_canonical_string(&versioned("patch", p)).as_bytes())?;
        }
    }
    for (key, t) in &ws.transcripts {
        atomic_write(&transcript_path(root, key), to_canonical_string(&versioned("transcript", t)).as_bytes())?;
    }
    for (batch, r) in &ws.reports {
        let dir = report_dir(root, batch);
        atomic_write(&dir.join("report.json"), to_canonical_string(&versioned("report", r)).as_bytes())?;
        atomic_write(&dir.join("report.csv"), r.to_csv().as_bytes())?;
        if let Ok(series) = r.series() {
            atomic_write(&dir.join("series.json"), to_canonical_string(&series).as_bytes())?;
        }
    }
    let file = LineageFile {
        schema_version: SCHEMA_VERSION,
        parents: ws.lineage.parent_map(),
        transcripts: ws.transcripts.keys().cloned().collect(),
        reports: ws.reports.keys().cloned().collect(),
    };
    atomic_write(&root.join("lineage.json"), to_canonical_string(&file).as_bytes())
}

/// Loads exactly what `lineage.json` lists; files written after the last
/// successful commit point are ignored.
pub fn load_workspace(root: &Path) -> Result<Workspace, WorkspaceError> {
    let path = root.join("lineage.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| WorkspaceError::ParseFailure { path: path.clone(), message: e.to_string() })?;
    check_version(&path, &value)?;
    let file: LineageFile = serde_json::from_value(value)
        .map_err(|e| WorkspaceError::ParseFailure { path: path.clone(), message: e.to_string() })?;

    let mut lineage = Lineage::new();
    for (id, parent) in &file.parents {
        let h = read_model(&model_path(root, id))?;
        if &h.parent != parent {
            return Err(WorkspaceError::ParseFailure {
                path: model_path(root, id),
                message: "parent differs from lineage.json".into(),
            });
        }
        if parent.is_some() {
            lineage.patches.insert(id.clone(), read_patch(&patch_path(root, id))?);
        }
        lineage.hypotheses.insert(id.clone(), h);
    }
    lineage.verify()?;

    let mut transcripts = BTreeMap::new();
    for key in &file.transcripts {
        transcripts.insert(key.clone(), read_versioned(&transcript_path(root, key), "transcript")?);
    }
    let mut reports = BTreeMap::new();
    for batch in &file.reports {
        reports.insert(batch.clone(), read_versioned(&report_dir(root, batch).join("report.json"), "report")?);
    }
    Ok(Workspace { lineage, transcripts, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{Edit, LevelTag, ModelPatch};

    fn three_hypotheses() -> Workspace {
        let mut ws = Workspace::default();
        let seed = ModelHypothesis::seed(fixtures::lunar_seed());
        ws.lineage.insert_seed(seed.clone()).unwrap();
        let mut p = ModelPatch::new(&seed, LevelTag::PostH2, 1);
        p.push(
            Edit::AddPredicate { predicate: crate::model::PredicateDecl::new("dusty", &[]) },
            true,
            "dust",
        );
        let h2 = ws.lineage.commit(p).unwrap();
        let p = ModelPatch::new(&h2, LevelTag::PostH3, 1);
        ws.lineage.commit(p).unwrap();
        ws
    }

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::default();
        save_workspace(&ws, dir.path()).unwrap();
        assert_eq!(load_workspace(dir.path()).unwrap(), ws);
    }

    #[test]
    fn lineage_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ws = three_hypotheses();
        assert_eq!(ws.lineage.len(), 3);
        save_workspace(&ws, dir.path()).unwrap();
        assert_eq!(load_workspace(dir.path()).unwrap(), ws);
    }

    #[test]
    fn corrupted_files_never_load_partially() {
        let dir = tempfile::tempdir().unwrap();
        let ws = three_hypotheses();
        save_workspace(&ws, dir.path()).unwrap();

        let lineage = dir.path().join("lineage.json");
        let original = fs::read_to_string(&lineage).unwrap();
        fs::write(&lineage, original.replace("\"schema_version\": 1", "\"schema_version\": 7")).unwrap();
        assert!(matches!(load_workspace(dir.path()), Err(WorkspaceError::SchemaVersionMismatch { .. })));

        fs::write(&lineage, &original[..original.len() / 2]).unwrap();
        assert!(matches!(load_workspace(dir.path()), Err(WorkspaceError::ParseFailure { .. })));

        fs::write(&lineage, &original).unwrap();
        let id = ws.lineage.heads()[0].id.clone();
        let model = model_path(dir.path(), &id);
        let text = fs::read_to_string(&model).unwrap();
        fs::write(&model, text.replace("\"iteration\": 1", "\"iteration\": 2")).unwrap();
        assert!(matches!(load_workspace(dir.path()), Err(WorkspaceError::ParseFailure { .. })));
    }

    #[test]
    fn orphan_files_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let ws = three_hypotheses();
        save_workspace(&ws, dir.path()).unwrap();
        let mut other = Workspace::default();
        other.lineage.insert_seed(ModelHypothesis::seed(fixtures::household_seed())).unwrap();
        for h in other.lineage.hypotheses.values() {
            write_model(dir.path(), h).unwrap();
        }
        assert_eq!(load_workspace(dir.path()).unwrap(), ws);
    }
}
