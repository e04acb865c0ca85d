//! CSV tables with a `#` header, JSON reports and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::params::Echo;

pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(v) if v.is_nan() => "NaN".into(),
            // shortest round-trip form; adding +0 turns -0 into 0
            Cell::Real(v) => format!("{:e}", v + 0.0),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self, command: &str, echo: &Echo, comments: &[String]) -> anyhow::Result<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "# casimir-cavity {command} {}", echo.header_line())?;
        for c in comments {
            writeln!(buf, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
    }
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    /// The invocation, enough to repeat the run.
    pub argv: Vec<String>,
    pub parameters: serde_json::Map<String, serde_json::Value>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub timestamp: String,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub results: serde_json::Map<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// What a command produced, before it is written out.
pub struct Emit {
    pub command: &'static str,
    pub body: Vec<u8>,
    pub echo: Echo,
    pub results: serde_json::Map<String, serde_json::Value>,
    pub warnings: Vec<String>,
}

/// Writes the body to `out` (plus its manifest) or to stdout.
pub fn emit(e: Emit, out: Option<&Path>, argv: &[String]) -> anyhow::Result<()> {
    for w in &e.warnings {
        eprintln!("warning: {w}");
    }
    let Some(out) = out else {
        std::io::stdout().write_all(&e.body)?;
        return Ok(());
    };
    std::fs::write(out, &e.body).with_context(|| format!("writing {}", out.display()))?;
    let manifest = RunManifest {
        command: e.command.to_string(),
        argv: argv.to_vec(),
        parameters: e.echo.0.into_iter().collect(),
        outputs: vec![out.to_path_buf()],
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        results: e.results,
        warnings: e.warnings,
    };
    let path = manifest_path(out);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
