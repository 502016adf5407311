//! Report rendering: key–value summaries with `#` metadata headers, and
//! comma-separated series files for plotting.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

/// Builder for the key–value summary format.
pub struct Summary {
    meta: Vec<String>,
    values: Vec<(String, String)>,
}

impl Summary {
    pub fn new(title: &str) -> Self {
        Summary {
            meta: vec![title.to_string()],
            values: Vec::new(),
        }
    }

    /// Adds a `# key = value` provenance line.
    pub fn meta(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.meta.push(format!("{key} = {value}"));
        self
    }

    /// Adds a `key = value` result line.
    pub fn kv(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.values.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.meta {
            out.push_str("# ");
            out.push_str(m);
            out.push('\n');
        }
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// Writes text to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .context("writing to stdout")
        }
    }
}

/// Writes a comma-separated series file: `#` metadata lines, one header row,
/// one row per record.
pub fn write_series(
    path: &Path,
    meta: &[String],
    header: &str,
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = String::new();
    for m in meta {
        out.push_str("# ");
        out.push_str(m);
        out.push('\n');
    }
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
