//! File writers. Every file starts with `#` comment lines carrying the config
//! hash and grid parameters; numbers use 17 significant digits.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use blowup_core::report::{fmt_f64, write_csv, KvBlock};

use crate::error::CliError;

pub struct OutDir {
    root: PathBuf,
    header: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path, header: Vec<String>) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            header,
        })
    }

    pub fn subdir(&self, name: &str) -> Result<Self, CliError> {
        Self::create(&self.root.join(name), self.header.clone())
    }

    fn open(&self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok((path, BufWriter::new(file)))
    }

    pub fn csv<I>(
        &self,
        name: &str,
        extra: &[String],
        columns: &[&str],
        rows: I,
    ) -> Result<(), CliError>
    where
        I: IntoIterator,
        I::Item: AsRef<[f64]>,
    {
        let (path, mut w) = self.open(name)?;
        let mut comments = self.header.clone();
        comments.extend_from_slice(extra);
        write_csv(&mut w, &comments, columns, rows)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))
    }

    pub fn kv(&self, name: &str, block: &KvBlock) -> Result<(), CliError> {
        self.text(name, &block.render())
    }

    pub fn text(&self, name: &str, body: &str) -> Result<(), CliError> {
        let (path, mut w) = self.open(name)?;
        let mut out = String::new();
        for line in &self.header {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(body);
        w.write_all(out.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))
    }
}

/// One line of the verification summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// `None` when the check could not run (e.g. no oracle for this problem).
    pub pass: Option<bool>,
    pub worst: f64,
    pub note: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, worst: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass: Some(pass),
            worst,
            note: note.into(),
        }
    }

    pub fn skipped(name: &str, note: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass: None,
            worst: f64::NAN,
            note: note.into(),
        }
    }

    /// Whether this check makes the run fail.
    pub fn blocks(&self) -> bool {
        self.pass == Some(false)
    }

    pub fn line(&self) -> String {
        let status = match self.pass {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "skipped",
        };
        format!(
            "{} status={} worst={} note={}",
            self.name,
            status,
            fmt_f64(self.worst),
            self.note
        )
    }
}

pub fn summary(checks: &[Check]) -> String {
    let mut s: String = checks.iter().map(|c| c.line() + "\n").collect();
    let failed = checks.iter().filter(|c| c.blocks()).count();
    s.push_str(&format!(
        "overall={}\n",
        if failed == 0 { "pass" } else { "fail" }
    ));
    s
}
