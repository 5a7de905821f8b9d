//! Sample and kernel files.
//!
//! A sample CSV has a header row holding the grid points followed by one row
//! per curve. A kernel CSV has the same header followed by `M` rows of the
//! kernel matrix. Numbers use the shortest representation that parses back
//! exactly.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use tikfar::error::FarError;
use tikfar::grid::make_trapezoid_grid;
use tikfar::moments::FunctionalSample;

use crate::error::{CliError, Result};

fn parse_row(record: &csv::StringRecord, line: usize) -> std::result::Result<Vec<f64>, FarError> {
    record
        .iter()
        .enumerate()
        .map(|(col, cell)| {
            let v: f64 = cell.trim().parse().map_err(|_| FarError::Parse {
                line,
                message: format!("column {}: invalid number '{cell}'", col + 1),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(FarError::Parse {
                    line,
                    message: format!("column {}: value must be finite", col + 1),
                })
            }
        })
        .collect()
}

/// Reads a sample CSV; the grid is rebuilt from the header with trapezoidal
/// weights.
pub fn parse_sample_csv<R: Read>(input: R) -> std::result::Result<FunctionalSample, FarError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut header: Option<Vec<f64>> = None;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| FarError::Parse {
            line: e.position().map_or(i + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        let values = parse_row(&record, line)?;
        match &header {
            None => header = Some(values),
            Some(h) if h.len() != values.len() => {
                return Err(FarError::Parse {
                    line,
                    message: format!("expected {} values, found {}", h.len(), values.len()),
                })
            }
            Some(_) => rows.push(values),
        }
    }
    let points = header.ok_or(FarError::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let grid = make_trapezoid_grid(&points)?;
    FunctionalSample::from_rows(grid, &rows)
}

pub fn read_sample_csv(path: &Path) -> Result<FunctionalSample> {
    let file = std::fs::File::open(path).map_err(|e| CliError::file(path, e))?;
    parse_sample_csv(std::io::BufReader::new(file)).map_err(|e| match e {
        FarError::Parse { .. } => CliError::file(path, e),
        other => other.into(),
    })
}

fn write_matrix<W: Write>(points: &[f64], rows: impl Iterator<Item = Vec<f64>>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Estimation(FarError::Io(e.to_string()));
    w.serialize(points).map_err(io)?;
    for r in rows {
        w.serialize(&r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Estimation(e.into()))?;
    Ok(())
}

pub fn write_sample_csv<W: Write>(sample: &FunctionalSample, out: W) -> Result<()> {
    write_matrix(
        sample.grid().points(),
        (0..sample.len()).map(|t| sample.curve_values(t)),
        out,
    )
}

pub fn write_kernel_csv<W: Write>(points: &[f64], kernel: &DMatrix<f64>, out: W) -> Result<()> {
    write_matrix(
        points,
        (0..kernel.nrows()).map(|i| kernel.row(i).iter().copied().collect()),
        out,
    )
}

pub fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| CliError::file(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::file(path, e))?;
    w.write_all(b"\n").map_err(|e| CliError::file(path, e))?;
    w.flush().map_err(|e| CliError::file(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::file(path, e))
}
