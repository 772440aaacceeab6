use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::RunResult;
use crate::error::{Error, Result};
use crate::metrics::MetricsRecord;

pub const CSV_HEADER: [&str; 12] = [
    "scenario",
    "scheme",
    "snr_db",
    "n_rf",
    "q_bits",
    "mean_R_bps_hz",
    "power_w",
    "eta",
    "mean_outer_iters",
    "mean_inner_iters",
    "trials",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Serialization(format!("{other:?}")),
    }
}

fn optional(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the header and one row per record. Unquantized records carry
/// `q_bits = 0`; iteration columns are empty for schemes without iterations.
pub fn write_csv<'a, W: Write>(
    records: impl IntoIterator<Item = &'a MetricsRecord>,
    writer: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in records {
        out.write_record([
            r.scenario.clone(),
            r.scheme.clone(),
            r.snr_db.to_string(),
            r.n_rf.to_string(),
            r.q_bits.unwrap_or(0).to_string(),
            r.mean_rate.to_string(),
            r.power_watts.to_string(),
            r.eta.to_string(),
            optional(r.mean_outer_iters),
            optional(r.mean_inner_iters),
            r.trials.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(result: &RunResult, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, result).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn read_json(text: &str) -> Result<RunResult> {
    serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
}

/// Writes `result` to `path` in `format`.
pub fn export(result: &RunResult, format: OutputFormat, path: &Path) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(&result.records, &mut file)?,
        OutputFormat::Json => write_json(result, &mut file)?,
    }
    file.flush()?;
    Ok(())
}
