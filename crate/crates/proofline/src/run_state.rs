//! The run directory: atomic artifact writes with `.done` markers, the event
//! log, the advisory lock and fault injection for crash tests.
//!
//! An artifact counts as complete only once its `<name>.done` sidecar exists.
//! Content and marker are each written to a temporary file in the target
//! directory and renamed into place, so a crash leaves either nothing, a
//! complete file without a marker, or both.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

pub const MARKER_SUFFIX: &str = ".done";
pub const EVENTS_FILE: &str = "events.log";
pub const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StorageError {
    #[error("storage full while writing {path}")]
    StorageFull { path: String },
    #[error("permission denied for {path}")]
    PermissionDenied { path: String },
    #[error("{path} is already complete and cannot be rewritten")]
    AlreadyComplete { path: String },
    #[error("write of {path} interrupted (injected crash)")]
    Interrupted { path: String },
    #[error("run directory {path} is locked by another process")]
    Locked { path: String },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl StorageError {
    fn from_io(path: &Path, err: io::Error) -> Self {
        let path = path.display().to_string();
        match err.kind() {
            io::ErrorKind::StorageFull => Self::StorageFull { path },
            io::ErrorKind::PermissionDenied => Self::PermissionDenied { path },
            _ => Self::Io { path, message: err.to_string() },
        }
    }
}

/// Where an injected crash strikes inside `persist_artifact`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashPoint {
    /// Nothing of the artifact reaches the disk.
    BeforeContent,
    /// The content is renamed into place but its marker is never written.
    AfterContent,
}

/// Simulates a process death on the `after_writes + 1`-th artifact write.
/// Every later write fails too, as if the process were gone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultPlan {
    pub after_writes: usize,
    pub point: CrashPoint,
}

#[derive(Debug, Default)]
struct FaultState {
    plan: Option<FaultPlan>,
    writes: usize,
    crashed: bool,
}

#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    faults: Mutex<FaultState>,
    events: Mutex<()>,
}

/// Held for as long as a process drives the run.
#[derive(Debug)]
pub struct RunLock {
    _file: File,
}

pub fn marker_path(rel: &str) -> String {
    format!("{rel}{MARKER_SUFFIX}")
}

fn write_atomically(dir: &Path, target: &Path, content: &[u8]) -> io::Result<()> {
    let mut tmp = tempfile::Builder::new().prefix(".tmp-").tempfile_in(dir)?;
    tmp.write_all(content)?;
    tmp.as_file().sync_all()?;
    tmp.persist(target).map_err(|e| e.error)?;
    Ok(())
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), faults: Mutex::new(FaultState::default()), events: Mutex::new(()) }
    }

    pub fn with_faults(self, plan: FaultPlan) -> Self {
        self.faults.lock().unwrap().plan = Some(plan);
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn is_complete(&self, rel: &str) -> bool {
        self.path(&marker_path(rel)).is_file()
    }

    /// Reads a complete artifact; `None` if its marker is missing.
    pub fn read_complete(&self, rel: &str) -> Result<Option<String>, StorageError> {
        if !self.is_complete(rel) {
            return Ok(None);
        }
        let path = self.path(rel);
        fs::read_to_string(&path).map(Some).map_err(|e| StorageError::from_io(&path, e))
    }

    /// Number of artifact writes attempted so far, crashed ones included.
    pub fn writes(&self) -> usize {
        self.faults.lock().unwrap().writes
    }

    fn check_fault(&self, rel: &str) -> Result<Option<CrashPoint>, StorageError> {
        let mut state = self.faults.lock().unwrap();
        if state.crashed {
            return Err(StorageError::Interrupted { path: rel.to_string() });
        }
        state.writes += 1;
        match state.plan {
            Some(plan) if state.writes > plan.after_writes => {
                state.crashed = true;
                Ok(Some(plan.point))
            }
            _ => Ok(None),
        }
    }

    /// Writes `content` to `rel` and then its marker. Rejects a second write
    /// to a complete artifact.
    pub fn persist_artifact(&self, rel: &str, content: &[u8]) -> Result<(), StorageError> {
        if self.is_complete(rel) {
            return Err(StorageError::AlreadyComplete { path: rel.to_string() });
        }
        let crash = self.check_fault(rel)?;
        if crash == Some(CrashPoint::BeforeContent) {
            return Err(StorageError::Interrupted { path: rel.to_string() });
        }
        let target = self.path(rel);
        let dir = target.parent().unwrap_or(&self.root).to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| StorageError::from_io(&dir, e))?;
        write_atomically(&dir, &target, content).map_err(|e| StorageError::from_io(&target, e))?;
        if crash == Some(CrashPoint::AfterContent) {
            return Err(StorageError::Interrupted { path: rel.to_string() });
        }
        let marker = self.path(&marker_path(rel));
        write_atomically(&dir, &marker, b"").map_err(|e| StorageError::from_io(&marker, e))
    }

    /// Appends one JSON line to `events.log` with a `ts` field in unix milliseconds.
    /// The log is advisory; failures to write it are ignored.
    pub fn append_event(&self, mut event: serde_json::Value) {
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
        if let Some(map) = event.as_object_mut() {
            map.insert("ts".into(), ts.into());
        }
        let _guard = self.events.lock().unwrap();
        let _ = fs::create_dir_all(&self.root);
        if let Ok(mut file) = OpenOptions::new().create(true).append(true).open(self.path(EVENTS_FILE)) {
            let _ = writeln!(file, "{event}");
        }
    }

    pub fn read_events(&self) -> Vec<serde_json::Value> {
        fs::read_to_string(self.path(EVENTS_FILE))
            .unwrap_or_default()
            .lines()
            .filter_map(|l| serde_json::from_str(l).ok())
            .collect()
    }

    /// Takes the advisory lock, failing fast if another process holds it.
    pub fn lock(&self) -> Result<RunLock, StorageError> {
        fs::create_dir_all(&self.root).map_err(|e| StorageError::from_io(&self.root, e))?;
        let path = self.path(LOCK_FILE);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| StorageError::from_io(&path, e))?;
        match file.try_lock() {
            Ok(()) => Ok(RunLock { _file: file }),
            Err(fs::TryLockError::WouldBlock) => Err(StorageError::Locked { path: self.root.display().to_string() }),
            Err(fs::TryLockError::Error(e)) => Err(StorageError::from_io(&path, e)),
        }
    }

    /// Relative paths (with `/` separators) of every marker in the tree,
    /// without the `.done` suffix, sorted.
    pub fn completed_artifacts(&self) -> Vec<String> {
        let mut out = Vec::new();
        walk(&self.root, "", &mut out);
        out.sort();
        out
    }
}

fn walk(dir: &Path, prefix: &str, out: &mut Vec<String>) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let rel = if prefix.is_empty() { name.clone() } else { format!("{prefix}/{name}") };
        let Ok(kind) = entry.file_type() else { continue };
        if kind.is_dir() {
            walk(&entry.path(), &rel, out);
        } else if let Some(artifact) = rel.strip_suffix(MARKER_SUFFIX) {
            out.push(artifact.to_string());
        }
    }
}
