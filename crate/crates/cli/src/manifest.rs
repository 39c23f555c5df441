//! Run manifest: a flat key=value record of every resolved parameter and
//! the SHA-256 of every artifact a command writes.
//!
//! Contains nothing time- or machine-dependent, so a rerun with identical
//! flags produces an identical manifest.

use sha2::{Digest, Sha256};
use std::fmt::Display;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub struct Manifest {
    dir: PathBuf,
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str, dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: vec![("command".into(), command.into())],
        })
    }

    /// Record a resolved parameter.
    pub fn record(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Write an artifact into the output directory and record its hash.
    pub fn write_artifact(&mut self, name: &str, content: &str) -> io::Result<()> {
        fs::write(self.dir.join(name), content)?;
        let mut hasher = Sha256::new();
        hasher.update(content.as_bytes());
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            let _ = write!(hex, "{byte:02x}");
        }
        // Rewriting the same artifact (e.g. a table flushed per row) keeps
        // only the final hash.
        self.entries
            .retain(|(k, _)| k != &format!("file.{name}.sha256"));
        self.entries.push((format!("file.{name}.sha256"), hex));
        Ok(())
    }

    /// Write `run_manifest.txt`.
    pub fn finish(self) -> io::Result<()> {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        fs::write(self.dir.join("run_manifest.txt"), out)
    }
}
