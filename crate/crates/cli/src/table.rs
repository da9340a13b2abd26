//! Reading numeric columns and writing small CSV tables.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::commands::CliError;

const DEFAULT_COLUMNS: [&str; 4] = ["sigma", "return", "value", "x"];

/// Reads one numeric column. Without an explicit name the first of
/// `sigma`, `return`, `value`, `x` present is used, or the only column.
pub fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| CliError::Input(e.to_string()))?.clone();
    let index = match column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("no column {name:?} in {}", path.display())))?,
        None => DEFAULT_COLUMNS
            .iter()
            .find_map(|c| headers.iter().position(|h| h == *c))
            .or((headers.len() == 1).then_some(0))
            .ok_or_else(|| {
                CliError::Input(format!("{}: pass --column to pick one of {:?}", path.display(), headers))
            })?,
    };
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(e.to_string()))?;
        let cell = record.get(index).unwrap_or("");
        let v: f64 = cell
            .parse()
            .map_err(|_| CliError::Input(format!("{}: line {}: bad number {cell:?}", path.display(), i + 2)))?;
        values.push(v);
    }
    Ok(values)
}

/// File when a path is given, stdout otherwise.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_table(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink(path)?);
    let err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Shortest round-trip formatting; NaN becomes an empty cell.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}
