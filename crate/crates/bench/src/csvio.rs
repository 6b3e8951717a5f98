//! CSV tables with the versioned schema comment line.

use std::fs;
use std::io::Write;
use std::path::Path;

use semsnr_core::yield_snr::YieldRow;

use crate::error::{BenchError, Result};

pub const SCHEMA_LINE: &str = "# semsnr-csv v1";

/// Shortest round-trip decimal; empty for NaN.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

pub fn parse_num(s: &str) -> Option<f64> {
    match s.trim() {
        "" => None,
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{SCHEMA_LINE}").expect("in-memory write");
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            if r.len() != header.len() {
                return Err(BenchError::Internal(format!(
                    "row has {} fields, header {} ({})",
                    r.len(),
                    header.len(),
                    path.display()
                )));
            }
            w.write_record(r)?;
        }
        w.flush().map_err(|e| BenchError::io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| BenchError::io(path, e))
}

/// Header and rows of a table; the schema line must come first.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    if text.lines().next() != Some(SCHEMA_LINE) {
        return Err(BenchError::Data(format!("{}: missing {SCHEMA_LINE:?} header line", path.display())));
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

/// Read a table and check its header matches `expected` exactly.
pub fn read_checked(path: &Path, expected: &[&str]) -> Result<Vec<Vec<String>>> {
    let (header, rows) = read_table(path)?;
    if header != expected {
        return Err(BenchError::Data(format!(
            "{}: header {:?} does not match schema {:?}",
            path.display(),
            header,
            expected
        )));
    }
    Ok(rows)
}

pub fn read_yield_table(path: &Path) -> Result<Vec<YieldRow>> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let rows = r.deserialize().collect::<std::result::Result<Vec<YieldRow>, _>>()?;
    Ok(rows)
}

pub fn write_yield_table(path: &Path, rows: &[YieldRow]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{SCHEMA_LINE}").expect("in-memory write");
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| BenchError::io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| BenchError::io(path, e))
}
