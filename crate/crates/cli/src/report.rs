use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level report. Object keys serialize sorted, so equal inputs give
/// byte-identical output once the timestamp is suppressed.
pub fn envelope(command: &str, config: BTreeMap<String, Value>, result: Value, timestamp: bool) -> Value {
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "result": result,
    });
    if timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        report["timestamp"] = json!(secs);
    }
    report
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Pretty JSON to `path`, or stdout.
pub fn emit(report: &Value, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
            Ok(())
        }
    }
}

/// Plot data with a header row; `None` cells are left empty.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|c| c.map_or_else(String::new, |v| format!("{v:e}"))).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}
