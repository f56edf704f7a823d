//! Resumable CSV result files.
//!
//! Every file starts with a `# config_hash = <hex>` line followed by the
//! column header. Rows are appended and flushed as soon as they are produced,
//! so an interrupted sweep resumes by skipping keys already present.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hex SHA-256 of a configuration description.
pub fn config_hash(config: &str) -> String {
    Sha256::digest(config.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Text form that re-parses to the identical `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct ResultsCsv {
    path: PathBuf,
    hash: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    /// Number of leading columns that identify a grid point.
    key_columns: usize,
}

impl ResultsCsv {
    /// Opens `path`, keeping existing rows when they were produced under the same configuration.
    pub fn open(path: impl AsRef<Path>, config: &str, columns: &[&str], key_columns: usize) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let hash = config_hash(config);
        let columns: Vec<String> = columns.iter().map(|s| s.to_string()).collect();
        let mut out = Self { path, hash, columns, rows: Vec::new(), key_columns };
        if out.path.exists() {
            if out.load_existing()? {
                return Ok(out);
            }
            log::warn!("{} was produced under a different configuration; rewriting", out.path.display());
        }
        out.rewrite()?;
        Ok(out)
    }

    fn load_existing(&mut self) -> Result<bool> {
        let mut lines = BufReader::new(File::open(&self.path)?).lines();
        let head = lines.next().transpose()?.unwrap_or_default();
        if head.trim() != format!("# config_hash = {}", self.hash) {
            return Ok(false);
        }
        let cols = lines.next().transpose()?.unwrap_or_default();
        if cols.trim() != self.columns.join(",") {
            return Ok(false);
        }
        let rest: String = lines.collect::<std::io::Result<Vec<_>>>()?.join("\n");
        let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(rest.as_bytes());
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() == self.columns.len() {
                self.rows.push(rec.iter().map(String::from).collect());
            }
        }
        Ok(true)
    }

    fn rewrite(&mut self) -> Result<()> {
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut f = File::create(&self.path)?;
        writeln!(f, "# config_hash = {}", self.hash)?;
        writeln!(f, "{}", self.columns.join(","))?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(f);
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Whether a row with these leading key fields exists.
    pub fn contains(&self, key: &[String]) -> bool {
        self.rows.iter().any(|r| r[..self.key_columns] == *key)
    }

    pub fn append(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Dimension { op: "ResultsCsv::append", detail: format!("{} fields for {} columns", row.len(), self.columns.len()) });
        }
        let f = OpenOptions::new().append(true).open(&self.path)?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(f);
        w.write_record(&row)?;
        w.flush()?;
        self.rows.push(row);
        Ok(())
    }
}
