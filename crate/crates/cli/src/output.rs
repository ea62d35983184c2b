use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Output directory that refuses to clobber files unless forced.
pub struct OutDir {
    dir: PathBuf,
    force: bool,
}

impl OutDir {
    /// Creates the directory and checks every target up front, so a refused
    /// run leaves nothing half-written.
    pub fn claim(dir: &Path, force: bool, names: &[&str]) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        if !force {
            for name in names {
                let p = dir.join(name);
                if p.exists() {
                    return Err(CliError::Exists(p));
                }
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            force,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.path(name);
        if !self.force && p.exists() {
            return Err(CliError::Exists(p));
        }
        std::fs::write(&p, bytes)?;
        tracing::info!(path = %p.display(), bytes = bytes.len(), "wrote");
        Ok(p)
    }

    pub fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn existing_files_need_force() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("nested/out");
        let out = OutDir::claim(&dir, false, &["a.csv"]).unwrap();
        out.write("a.csv", b"1").unwrap();
        assert!(matches!(
            OutDir::claim(&dir, false, &["b.csv", "a.csv"]),
            Err(CliError::Exists(_))
        ));
        let forced = OutDir::claim(&dir, true, &["a.csv"]).unwrap();
        forced.write("a.csv", b"2").unwrap();
        assert_eq!(std::fs::read(dir.join("a.csv")).unwrap(), b"2");
    }
}
