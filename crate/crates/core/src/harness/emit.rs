//! Result emission: CSV rows for plotting pipelines and structured
//! JSON for everything else.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

use super::sweep::MetricsRecord;

/// The exact CSV column set, in order.
pub const METRICS_HEADER: &str =
    "scheme,num_slots,n_b,esn0_db,load,frames,throughput,throughput_ci95,plr,plr_ci95";

/// Renders records as CSV with the canonical header. Floats use the
/// shortest representation that round-trips, so output is stable across
/// runs and platforms.
pub fn metrics_csv_string(records: &[MetricsRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.num_slots,
            r.n_b,
            r.esn0_db,
            r.load,
            r.frames,
            r.throughput,
            r.throughput_ci95,
            r.plr,
            r.plr_ci95
        );
    }
    out
}

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], mut out: W) -> Result<()> {
    out.write_all(metrics_csv_string(records).as_bytes())
        .map_err(|e| Error::io("<metrics csv>", e))
}

pub fn write_metrics_json<W: Write>(records: &[MetricsRecord], mut out: W) -> Result<()> {
    let text = serde_json::to_string_pretty(records)
        .map_err(|e| Error::input(format!("metrics serialization: {e}")))?;
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<metrics json>", e))?;
    out.write_all(b"\n").map_err(|e| Error::io("<metrics json>", e))
}

/// Output selection for result files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    /// JSON records carrying the same fields.
    Structured,
    Both,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "structured" | "json" => Ok(OutputFormat::Structured),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::config(format!(
                "unknown output format '{other}' (expected csv, structured or both)"
            ))),
        }
    }
}

impl OutputFormat {
    fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    fn wants_json(self) -> bool {
        matches!(self, OutputFormat::Structured | OutputFormat::Both)
    }
}

/// Writes `<dir>/<basename>.csv` and/or `<dir>/<basename>.json`,
/// creating the directory, and returns the written paths.
pub fn emit_results(
    records: &[MetricsRecord],
    dir: &Path,
    basename: &str,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut written = Vec::new();
    if format.wants_csv() {
        let path = dir.join(format!("{basename}.csv"));
        fs::write(&path, metrics_csv_string(records))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        written.push(path);
    }
    if format.wants_json() {
        let path = dir.join(format!("{basename}.json"));
        let mut buf = Vec::new();
        write_metrics_json(records, &mut buf)?;
        fs::write(&path, buf).map_err(|e| Error::io(path.display().to_string(), e))?;
        written.push(path);
    }
    Ok(written)
}
