//! Output directories that refuse to clobber and clean up after failures.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::manifest::{FileRecord, MANIFEST_NAME};

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    /// Opens `root` for writing. A non-empty directory is refused unless
    /// `force` is set, in which case its manifest and files with one of the
    /// `owned` extensions are removed first; other files are left alone.
    pub fn prepare(root: &Path, owned: &[&str], force: bool) -> CliResult<Self> {
        if root.exists() {
            if !root.is_dir() {
                return Err(CliError::usage(format!("{} exists and is not a directory", root.display())));
            }
            let entries: Vec<PathBuf> =
                fs::read_dir(root)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
            if !entries.is_empty() && !force {
                return Err(CliError::usage(format!(
                    "output directory {} is not empty; pass --force to overwrite",
                    root.display()
                )));
            }
            for path in entries {
                let is_manifest = path.file_name().is_some_and(|n| n == MANIFEST_NAME);
                let is_owned = path.extension().and_then(|e| e.to_str()).is_some_and(|e| owned.contains(&e));
                if path.is_file() && (is_manifest || is_owned) {
                    fs::remove_file(&path)?;
                }
            }
        } else {
            fs::create_dir_all(root)?;
        }
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult {
        self.written.push(name.to_string());
        fs::write(self.root.join(name), bytes)?;
        Ok(())
    }

    /// Writes a file through `body`, which receives a buffered writer.
    pub fn write_with(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<fs::File>) -> firesim_core::Result<()>,
    ) -> CliResult {
        self.written.push(name.to_string());
        let mut w = BufWriter::new(fs::File::create(self.root.join(name))?);
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn records(&self) -> CliResult<Vec<FileRecord>> {
        self.written.iter().map(|name| FileRecord::of(&self.root.join(name), name.clone())).collect()
    }

    /// Removes everything written so far.
    pub fn discard(&mut self) {
        for name in self.written.drain(..) {
            let _ = fs::remove_file(self.root.join(name));
        }
    }
}
