//! All-or-nothing file output for a pipeline stage.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

const PARTIAL_SUFFIX: &str = ".partial";

/// Files written under a temporary name and renamed into place only by
/// [`StagedOutputs::commit`]. Dropping without committing deletes them.
pub struct StagedOutputs {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
}

impl StagedOutputs {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), staged: Vec::new() }
    }

    /// Create `relative` (sub-directories allowed) and fill it with `fill`.
    pub fn write<E>(
        &mut self,
        relative: &str,
        fill: impl FnOnce(&mut BufWriter<File>) -> Result<(), E>,
    ) -> Result<(), String>
    where
        E: std::fmt::Display,
    {
        let target = self.dir.join(relative);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent).map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        }
        let mut tmp_name = target.file_name().unwrap_or_default().to_os_string();
        tmp_name.push(PARTIAL_SUFFIX);
        let tmp = target.with_file_name(tmp_name);
        self.staged.push((tmp.clone(), target.clone()));
        let file = File::create(&tmp).map_err(|e| format!("cannot create {}: {e}", tmp.display()))?;
        let mut w = BufWriter::new(file);
        fill(&mut w).map_err(|e| format!("writing {relative}: {e}"))?;
        w.flush().map_err(|e| format!("writing {relative}: {e}"))?;
        Ok(())
    }

    /// Final paths of the staged files, in write order.
    pub fn paths(&self) -> Vec<PathBuf> {
        self.staged.iter().map(|(_, t)| t.clone()).collect()
    }

    pub fn commit(mut self) -> Result<Vec<PathBuf>, String> {
        let staged = std::mem::take(&mut self.staged);
        let mut done = Vec::with_capacity(staged.len());
        for (i, (tmp, target)) in staged.iter().enumerate() {
            if let Err(e) = fs::rename(tmp, target) {
                for (t, _) in &staged[i..] {
                    let _ = fs::remove_file(t);
                }
                for t in &done {
                    let _ = fs::remove_file(t);
                }
                return Err(format!("cannot move {} into place: {e}", target.display()));
            }
            done.push(target.clone());
        }
        Ok(done)
    }
}

impl Drop for StagedOutputs {
    fn drop(&mut self) {
        for (tmp, _) in &self.staged {
            let _ = fs::remove_file(tmp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dropped_outputs_leave_nothing() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut out = StagedOutputs::new(dir.path());
            out.write("a.csv", |w| w.write_all(b"x")).unwrap();
            let err = out.write("sub/b.csv", |_| Err::<(), _>("boom"));
            assert!(err.is_err());
        }
        assert!(!dir.path().join("a.csv").exists());
        assert!(!dir.path().join("a.csv.partial").exists());
        assert!(!dir.path().join("sub/b.csv.partial").exists());
    }

    #[test]
    fn committed_outputs_are_renamed() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = StagedOutputs::new(dir.path());
        out.write("a.csv", |w| w.write_all(b"x")).unwrap();
        let paths = out.commit().unwrap();
        assert_eq!(paths, vec![dir.path().join("a.csv")]);
        assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), b"x");
    }
}
