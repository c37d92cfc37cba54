use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::train::MetricRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["iteration", "loss", "executions", "wall_ms", "seed"];

/// Fixed-point decimal with 10 significant digits, e.g. `0.5000000000`, `12.34567890`.
pub fn format_sig10(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0.000000000".into() } else { v.to_string() };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (9 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Writes metrics as LF-terminated CSV with the fixed header.
pub fn write_metrics_csv(rows: &[MetricRow], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        w.write_record(CSV_HEADER)?;
        for r in rows {
            w.write_record([
                r.iteration.to_string(),
                format_sig10(r.loss),
                r.executions.to_string(),
                r.wall_ms.to_string(),
                r.seed.to_string(),
            ])?;
        }
        w.flush()?;
    }
    File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let malformed = |reason: String| Error::MalformedCsv {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(malformed(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e: csv::Error| malformed(e.to_string())))
        .collect()
}
