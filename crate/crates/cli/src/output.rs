//! Output envelope shared by all subcommands. Every file or stdout dump
//! starts with the tool version, a canonical echo of the run
//! configuration, and the seed, so a result can always be traced back to
//! the exact invocation that produced it. Reruns of the same
//! configuration are byte-identical; the wall-clock duration would break
//! that, so it is only included on request.

use std::path::PathBuf;

use clap::ValueEnum;
use serde_json::json;

use walksim_core::{Error, Result};

pub const TOOL: &str = "walksim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Serialization dialect selected with `--format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Comma separators, '.' decimals, one header row, LF line endings.
    Csv,
    /// Pretty-printed JSON object.
    Json,
}

impl Format {
    pub fn token(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// A command's result, already shaped for the requested format but not
/// yet wrapped in the metadata envelope.
pub enum Payload {
    Json(serde_json::Value),
    /// CSV body: header row plus data rows, possibly followed by
    /// comment-marked summary sections.
    Csv(String),
}

/// Wraps the payload in the metadata envelope and renders the final
/// byte content.
pub fn render(
    config: &str,
    seed: u64,
    duration_seconds: Option<f64>,
    payload: Payload,
) -> Result<String> {
    match payload {
        Payload::Json(data) => {
            let mut doc = serde_json::Map::new();
            doc.insert("tool".into(), json!(TOOL));
            doc.insert("version".into(), json!(VERSION));
            doc.insert("config".into(), json!(config));
            doc.insert("seed".into(), json!(seed));
            if let Some(secs) = duration_seconds {
                doc.insert("duration_seconds".into(), json!(secs));
            }
            doc.insert("data".into(), data);
            let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))?;
            text.push('\n');
            Ok(text)
        }
        Payload::Csv(body) => {
            let mut text = format!("# tool: {TOOL} {VERSION}\n# config: {config}\n# seed: {seed}\n");
            if let Some(secs) = duration_seconds {
                text.push_str(&format!("# duration_seconds: {secs}\n"));
            }
            text.push_str(&body);
            Ok(text)
        }
    }
}

/// One CSV table: header row plus one line per row vector.
pub fn csv_table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row);
        s.push('\n');
    }
    s
}

/// Writes to the output path, or stdout when none was given. File
/// failures name the path.
pub fn deliver(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Reads a file to string, naming the path on failure.
pub fn read_with_path(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}
