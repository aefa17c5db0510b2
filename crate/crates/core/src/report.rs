//! JSON and CSV renderings of trial records. Floats are written with 17
//! significant digits.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use thiserror::Error;

use crate::record::TrialRecord;

pub const CSV_HEADER: &str = "identity_id,seed,n,verdict,max_residual,wall_time_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!(
                "unknown report format `{other}` (expected json or csv)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("refusing to write an empty report")]
    Empty,
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Compact JSON with every float as `d.dddddddddddddddde±x`.
struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", sig17(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{}", sig17(value as f64))
    }
}

pub fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Any serializable value as JSON with 17-significant-digit floats.
pub fn to_json_sig17<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn render_report(records: &[TrialRecord], format: ReportFormat) -> Result<String, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut out = String::new();
    match format {
        ReportFormat::Json => {
            out.push_str("[\n");
            for (i, r) in records.iter().enumerate() {
                out.push_str("  ");
                out.push_str(&to_json_sig17(r)?);
                out.push_str(if i + 1 < records.len() { ",\n" } else { "\n" });
            }
            out.push_str("]\n");
        }
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in records {
                let max = r.max_residual().map(sig17).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.identity_id,
                    r.seed,
                    r.n,
                    r.verdict,
                    max,
                    sig17(r.wall_time)
                );
            }
        }
    }
    Ok(out)
}

pub fn emit_report(
    records: &[TrialRecord],
    format: ReportFormat,
    destination: &Path,
) -> Result<(), ReportError> {
    let text = render_report(records, format)?;
    std::fs::write(destination, text).map_err(|source| ReportError::Io {
        path: destination.to_path_buf(),
        source,
    })
}
