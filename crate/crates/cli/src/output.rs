//! Writing artifacts to the output directory.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::run::Artifact;

/// Writes every artifact into `dir`, creating it if needed. On any failure
/// the files written so far (and the directory, if this call created it)
/// are removed again.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> io::Result<Vec<PathBuf>> {
    let created = !dir.exists();
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = dir.join(&a.name);
        if let Err(e) = fs::write(&path, a.contents.as_bytes()) {
            remove_partial(dir, &written, created);
            let _ = fs::remove_file(&path);
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}

pub fn remove_partial(dir: &Path, written: &[PathBuf], created: bool) {
    for p in written {
        let _ = fs::remove_file(p);
    }
    if created {
        let _ = fs::remove_dir(dir);
    }
}
