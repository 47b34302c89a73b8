//! Flat `key=value` report blocks and `#`-commented CSV tables.

use std::fmt::Display;
use std::io::{self, Write};

/// Full round-trip precision: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Ordered list of `key=value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvBlock {
    entries: Vec<(String, String)>,
}

impl KvBlock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(mut self, key: impl Into<String>, value: impl Display) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn real(self, key: impl Into<String>, value: f64) -> Self {
        self.text(key, fmt_f64(value))
    }

    /// Appends every entry of `other` with `prefix.` prepended to its key.
    pub fn nested(mut self, prefix: &str, other: KvBlock) -> Self {
        for (k, v) in other.entries {
            self.entries.push((format!("{prefix}.{k}"), v));
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Parses text produced by [`KvBlock::render`]; `#` lines and blanks are skipped.
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Self { entries }
    }
}

pub trait ToKv {
    fn to_kv(&self) -> KvBlock;
}

/// Writes a CSV table preceded by `# ` comment lines.
pub fn write_csv<W, I>(
    out: &mut W,
    comments: &[String],
    columns: &[&str],
    rows: I,
) -> io::Result<()>
where
    W: Write,
    I: IntoIterator,
    I::Item: AsRef<[f64]>,
{
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|&x| fmt_f64(x)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
