//! In-memory registry of background runs.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Simulation,
    Validation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHandle {
    pub run_id: String,
    pub kind: RunKind,
    pub status: RunStatus,
    /// Serialized result once done.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<RunError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunError {
    pub code: String,
    pub message: String,
}

struct Entry {
    handle: RunHandle,
    /// Exact result bytes, kept so clients can fetch them unchanged.
    raw: Option<String>,
}

#[derive(Default)]
pub struct RunRegistry {
    inner: Mutex<Inner>,
}

#[derive(Default)]
struct Inner {
    next: u64,
    runs: BTreeMap<String, Entry>,
}

impl RunRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a queued run and returns its handle.
    pub fn create(&self, kind: RunKind) -> RunHandle {
        let mut inner = self.inner.lock().expect("run registry poisoned");
        inner.next += 1;
        let prefix = match kind {
            RunKind::Simulation => "sim",
            RunKind::Validation => "val",
        };
        let handle = RunHandle {
            run_id: format!("{prefix}-{:06}", inner.next),
            kind,
            status: RunStatus::Queued,
            result: None,
            error: None,
        };
        inner.runs.insert(handle.run_id.clone(), Entry { handle: handle.clone(), raw: None });
        handle
    }

    pub fn get(&self, run_id: &str) -> Option<RunHandle> {
        self.inner.lock().expect("run registry poisoned").runs.get(run_id).map(|e| e.handle.clone())
    }

    /// Result bytes of a finished run.
    pub fn raw_result(&self, run_id: &str) -> Option<Option<String>> {
        self.inner.lock().expect("run registry poisoned").runs.get(run_id).map(|e| e.raw.clone())
    }

    /// Moves a run forward; backward transitions are ignored.
    fn advance(&self, run_id: &str, status: RunStatus, f: impl FnOnce(&mut Entry)) {
        let mut inner = self.inner.lock().expect("run registry poisoned");
        if let Some(entry) = inner.runs.get_mut(run_id) {
            if entry.handle.status < status && !matches!(entry.handle.status, RunStatus::Done | RunStatus::Failed) {
                entry.handle.status = status;
                f(entry);
            }
        }
    }

    pub fn start(&self, run_id: &str) {
        self.advance(run_id, RunStatus::Running, |_| {});
    }

    pub fn finish(&self, run_id: &str, raw: String) {
        let value = serde_json::from_str(&raw).ok();
        self.advance(run_id, RunStatus::Done, |e| {
            e.handle.result = value;
            e.raw = Some(raw);
        });
    }

    pub fn fail(&self, run_id: &str, code: &str, message: String) {
        self.advance(run_id, RunStatus::Failed, |e| {
            e.handle.error = Some(RunError { code: code.to_string(), message });
        });
    }
}
