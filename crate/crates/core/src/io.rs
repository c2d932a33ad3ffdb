//! Comma-separated numeric files: one observation per row, `.` decimals,
//! optional single header row.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

fn read_rows(path: &Path, header: bool) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse {
                line,
                column: record.len().min(expected) + 1,
                message: format!("row has {} fields, expected {expected}", record.len()),
            });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    line,
                    column: j + 1,
                    message: format!("`{field}` is not a finite number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "no data rows".into(),
        });
    }
    Ok(rows)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            column: 1,
            message: format!("{other:?}"),
        },
    }
}

pub fn read_matrix(path: impl AsRef<Path>, header: bool) -> Result<DataMatrix> {
    DataMatrix::from_rows(&read_rows(path.as_ref(), header)?)
}

/// A single-column file.
pub fn read_vector(path: impl AsRef<Path>, header: bool) -> Result<Vec<f64>> {
    let rows = read_rows(path.as_ref(), header)?;
    if rows[0].len() != 1 {
        return Err(Error::Parse {
            line: if header { 2 } else { 1 },
            column: 2,
            message: format!("expected a single column, found {}", rows[0].len()),
        });
    }
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

/// Shortest text that parses back to the same value.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn matrix_to_csv(x: &DataMatrix, header: Option<&[String]>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for row in x.rows_iter() {
        push_row(&mut out, row);
    }
    out
}

fn push_row(out: &mut String, row: &[f64]) {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        out.push_str(&format_number(*v));
    }
    out.push('\n');
}

pub fn write_matrix(path: impl AsRef<Path>, x: &DataMatrix) -> Result<()> {
    Ok(fs::write(path, matrix_to_csv(x, None))?)
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(v.len() * 20);
    for x in v {
        let _ = writeln!(out, "{}", format_number(*x));
    }
    Ok(fs::write(path, out)?)
}

/// Write a table with a header row; cells are preformatted.
pub fn write_table(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    Ok(fs::write(path, out)?)
}
