use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::graph::KnowledgeBase;
use crate::injection;

use super::catalog::dispatch;
use super::{TransformError, TransformationOutcome, TransformationRequest};

pub const LOCK_FILE: &str = "parthenos.lock";

/// Advisory lock over a repository, held for the lifetime of the value.
/// A second acquisition fails instead of waiting.
#[derive(Debug)]
pub struct RepoLock {
    path: PathBuf,
}

impl RepoLock {
    pub fn acquire(repo: &Path) -> Result<RepoLock, TransformError> {
        let path = repo.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(RepoLock { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(TransformError::Locked(path.display().to_string())),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for RepoLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Runs one request and, when it applies, injects the delta into `repo` and
/// persists the new model to `kb_file`. A rejection or any failure leaves the
/// repository and `kb_file` untouched.
pub fn apply_transformation(
    kb: &KnowledgeBase,
    repo: &Path,
    req: &TransformationRequest,
    kb_file: Option<&Path>,
) -> Result<TransformationOutcome, TransformError> {
    let _lock = RepoLock::acquire(repo)?;
    let outcome = dispatch(kb, req)?;
    if outcome.is_applied() && !outcome.delta.is_empty() {
        injection::synchronize(repo, kb, &outcome.kb_after, &outcome.delta, kb_file)?;
    }
    Ok(outcome)
}
