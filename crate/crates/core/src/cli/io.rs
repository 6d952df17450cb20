use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ch::TraceRecord;
use crate::{Error, Result};

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub delta0: f64,
    pub outer_iters: usize,
    pub fft_count: u64,
    pub inner_iters_total: usize,
    pub wall_time_s: f64,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn write_records<T: Serialize, W: Write>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Header-only output for an empty table.
fn write_header<W: Write>(mut out: W, header: &str) -> Result<()> {
    writeln!(out, "{header}")?;
    Ok(())
}

pub const TRACE_HEADER: &str =
    "outer_iter,residual_L_norm,energy,energy_gap,inner_iters,cumulative_ffts,wall_time_s";
pub const SUMMARY_HEADER: &str = "delta0,outer_iters,fft_count,inner_iters_total,wall_time_s";

pub fn write_trace(path: impl AsRef<Path>, trace: &[TraceRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    if trace.is_empty() {
        return write_header(file, TRACE_HEADER);
    }
    write_records(std::io::BufWriter::new(file), trace)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != TRACE_HEADER {
        return Err(Error::Parse {
            path: path.display().to_string(),
            message: format!(
                "unexpected header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    reader
        .deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}

pub fn write_summary(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    if rows.is_empty() {
        return write_header(file, SUMMARY_HEADER);
    }
    write_records(std::io::BufWriter::new(file), rows)
}

pub fn read_summary(path: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    reader
        .deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}
