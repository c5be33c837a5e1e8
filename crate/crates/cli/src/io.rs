//! Headered CSV files.
//!
//! Floats are printed in scientific notation with 17 significant digits, which
//! parses back to the same `f64`, so export → import → export is
//! byte-identical.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use evoclust::numerics::Matrix;

use crate::error::{CliError, CliResult};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Creates `path` and hands a buffered writer to `body`.
pub fn write_file(
    path: &Path,
    body: impl FnOnce(&mut csv::Writer<BufWriter<File>>) -> csv::Result<()>,
) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(file));
    body(&mut w).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    // Flushes the csv buffer and the file buffer beneath it.
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Columns `f0..f{D-1},label`, one row per point.
pub fn write_dataset(path: &Path, points: &Matrix, labels: &[usize]) -> CliResult<()> {
    debug_assert_eq!(points.nrows(), labels.len());
    write_file(path, |w| {
        let mut header: Vec<String> = (0..points.ncols()).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(points.ncols() + 1);
        for (i, label) in labels.iter().enumerate() {
            row.clear();
            row.extend(points.row(i).iter().map(|&x| fmt_f64(x)));
            row.push(label.to_string());
            w.write_record(&row)?;
        }
        Ok(())
    })
}

/// A dataset read back from disk. Labels are kept as written.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Matrix,
    pub labels: Vec<usize>,
}

fn malformed(path: &Path, line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::input(format!("{}:{line}: {msg}", path.display()))
}

pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let header = reader.headers().map_err(|e| malformed(path, 1, e))?.clone();
    let d = header.len().saturating_sub(1);
    let expected = (0..d)
        .map(|j| format!("f{j}"))
        .chain(std::iter::once("label".to_string()));
    if d == 0 || !header.iter().eq(expected) {
        return Err(malformed(path, 1, "header must be f0,...,f{D-1},label"));
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(path, line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for j in 0..d {
            let x: f64 = record[j]
                .trim()
                .parse()
                .map_err(|_| malformed(path, line, format!("f{j} '{}' is not a number", &record[j])))?;
            if !x.is_finite() {
                return Err(malformed(path, line, format!("f{j} is not finite")));
            }
            data.push(x);
        }
        let label: usize = record[d].trim().parse().map_err(|_| {
            malformed(
                path,
                line,
                format!("label '{}' is not a non-negative integer", &record[d]),
            )
        })?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(malformed(path, 2, "dataset has no rows"));
    }
    Ok(Dataset {
        points: Matrix::from_row_slice(labels.len(), d, &data),
        labels,
    })
}

/// Reads a headered CSV into named string columns.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// 1-based file line of each row.
    pub lines: Vec<u64>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let header = reader
            .headers()
            .map_err(|e| malformed(path, 1, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| malformed(path, e.position().map_or(0, |p| p.line()), e))?;
            lines.push(record.position().map_or(0, |p| p.line()));
            rows.push(record.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows, lines })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}
