use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::InjectionError;

/// A point in the write protocol where a fault can be injected in tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteStep {
    /// Before writing the temporary sibling of file `i`.
    Stage(usize),
    /// Before renaming the temporary sibling of file `i` over the original.
    Commit(usize),
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.parthenos-tmp"))
}

/// Writes `(repository-relative path, text)` pairs under `repo` atomically.
pub fn write_sources(repo: &Path, edits: &[(String, String)]) -> Result<(), InjectionError> {
    let files: Vec<(PathBuf, String)> = edits.iter().map(|(p, t)| (repo.join(p), t.clone())).collect();
    write_files(&files)
}

/// Writes every file or none: all contents are staged to hidden siblings
/// first, then renamed into place. Any failure restores the original bytes
/// (or removes files that did not exist).
pub fn write_files(files: &[(PathBuf, String)]) -> Result<(), InjectionError> {
    write_files_with(files, &mut |_| Ok(()))
}

/// [`write_files`] with a hook called before each step; an error from the hook
/// is treated as a write failure.
pub fn write_files_with(
    files: &[(PathBuf, String)],
    hook: &mut dyn FnMut(WriteStep) -> io::Result<()>,
) -> Result<(), InjectionError> {
    let mut originals: Vec<Option<Vec<u8>>> = Vec::with_capacity(files.len());
    for (path, _) in files {
        match fs::read(path) {
            Ok(bytes) => originals.push(Some(bytes)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => originals.push(None),
            Err(e) => {
                return Err(InjectionError::Io {
                    message: format!("{}: {e}", path.display()),
                    rolled_back: true,
                })
            }
        }
    }

    let mut staged: Vec<PathBuf> = Vec::new();
    let mut created_dirs: Vec<PathBuf> = Vec::new();
    let stage = |i: usize,
                 path: &Path,
                 text: &str,
                 staged: &mut Vec<PathBuf>,
                 created_dirs: &mut Vec<PathBuf>,
                 hook: &mut dyn FnMut(WriteStep) -> io::Result<()>|
     -> io::Result<()> {
        hook(WriteStep::Stage(i))?;
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() && !parent.exists() {
                fs::create_dir_all(parent)?;
                created_dirs.push(parent.to_path_buf());
            }
        }
        let tmp = temp_sibling(path);
        fs::write(&tmp, text)?;
        staged.push(tmp);
        Ok(())
    };
    for (i, (path, text)) in files.iter().enumerate() {
        if let Err(e) = stage(i, path, text, &mut staged, &mut created_dirs, hook) {
            let clean = staged.iter().all(|t| fs::remove_file(t).is_ok());
            let dirs = created_dirs.iter().rev().all(|d| fs::remove_dir(d).is_ok());
            return Err(InjectionError::Io {
                message: format!("staging {}: {e}", path.display()),
                rolled_back: clean && dirs,
            });
        }
    }

    for (i, (path, _)) in files.iter().enumerate() {
        let result = hook(WriteStep::Commit(i)).and_then(|_| fs::rename(&staged[i], path));
        if let Err(e) = result {
            let mut restored = true;
            for (j, (done, _)) in files.iter().enumerate().take(i) {
                restored &= match &originals[j] {
                    Some(bytes) => fs::write(done, bytes).is_ok(),
                    None => fs::remove_file(done).is_ok(),
                };
            }
            for tmp in &staged[i..] {
                restored &= fs::remove_file(tmp).is_ok();
            }
            for d in created_dirs.iter().rev() {
                let _ = fs::remove_dir(d);
            }
            return Err(InjectionError::Io {
                message: format!("committing {}: {e}", path.display()),
                rolled_back: restored,
            });
        }
    }
    Ok(())
}
