//! Rebuild summaries from the CSVs of earlier runs.

use std::fmt::Write as _;
use std::path::Path;

use semsnr_core::estimators::Method;

use crate::csvio::{parse_num, read_checked, read_table, write_table};
use crate::denoise::DENOISE_SUMMARY_HEADER;
use crate::error::{BenchError, Result};
use crate::estimate::{summarize, summary_records, ResultRow, RESULTS_HEADER, SUMMARY_HEADER};
use crate::sweep::SWEEP_SUMMARY_HEADER;

/// Read results.csv back into rows (diagnostics are not restored).
pub fn load_results(path: &Path) -> Result<Vec<ResultRow>> {
    let rows = read_checked(path, &RESULTS_HEADER)?;
    rows.into_iter()
        .map(|r| {
            let method: Method = r[1].parse().map_err(|e| BenchError::Data(format!("{}: {e}", path.display())))?;
            Ok(ResultRow {
                image_id: r[0].clone(),
                method,
                status: r[2].clone(),
                oracle_snr: parse_num(&r[3]).unwrap_or(f64::NAN),
                snr_linear: parse_num(&r[4]),
                snr_db: parse_num(&r[5]),
                predicted_nf_peak: parse_num(&r[7]),
                runtime_ms: parse_num(&r[8]).unwrap_or(f64::NAN),
                error: None,
                diagnostics: serde_json::Value::Null,
            })
        })
        .collect()
}

fn table(out: &mut String, title: &str, header: &[String], rows: &[Vec<String>]) {
    let widths: Vec<usize> = (0..header.len())
        .map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ")
    };
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{}", line(header));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
    out.push('\n');
}

/// Regenerate summary.csv from results.csv (when present) and render every
/// summary found in `dir` as text.
pub fn report(dir: &Path) -> Result<String> {
    let mut text = String::new();
    let mut found = false;
    let results = dir.join("results.csv");
    if results.exists() {
        let rows = load_results(&results)?;
        let recs = summary_records(&summarize(&rows));
        write_table(&dir.join("summary.csv"), &SUMMARY_HEADER, &recs)?;
        let h: Vec<String> = SUMMARY_HEADER.iter().map(|s| s.to_string()).collect();
        table(&mut text, "estimators", &h, &recs);
        found = true;
    }
    for (name, header, title) in [
        ("sweep_summary.csv", &SWEEP_SUMMARY_HEADER[..], "sweep"),
        ("denoise_summary.csv", &DENOISE_SUMMARY_HEADER[..], "denoising"),
    ] {
        let p = dir.join(name);
        if p.exists() {
            let rows = read_checked(&p, header)?;
            let (h, _) = read_table(&p)?;
            table(&mut text, title, &h, &rows);
            found = true;
        }
    }
    if !found {
        return Err(BenchError::Data(format!("{}: no results.csv, sweep_summary.csv or denoise_summary.csv", dir.display())));
    }
    Ok(text)
}
