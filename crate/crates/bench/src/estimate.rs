//! Estimator runs over a corpus: results.csv, a JSON-lines diagnostics
//! sidecar and a per-method summary.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use semsnr_core::estimators::{estimate_methods, EpsilonPolicy, EstimatorConfig, Method, Outcome, QuadraticCorrection};
use semsnr_core::correlation::Axis;
use serde_json::json;

use crate::config::Config;
use crate::corpus::{pool, Entry};
use crate::csvio::{num, opt, write_table};
use crate::error::{BenchError, Result};

pub const RESULTS_HEADER: [&str; 9] = [
    "image_id",
    "method",
    "status",
    "oracle_snr",
    "snr_linear",
    "snr_db",
    "rel_error",
    "predicted_nf_peak",
    "runtime_ms",
];

pub const SUMMARY_HEADER: [&str; 5] = ["method", "n", "n_finite", "median_abs_rel_error", "median_rel_error"];

#[derive(Debug, Clone)]
pub struct Settings {
    pub estimator: EstimatorConfig,
    pub methods: Vec<Method>,
}

impl Default for Settings {
    fn default() -> Self {
        Self { estimator: EstimatorConfig::default(), methods: Method::ALL.to_vec() }
    }
}

/// `all`, `single`, or a comma-separated list of method names.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    match s.trim() {
        "all" => Ok(Method::ALL.to_vec()),
        "single" => Ok(Method::SINGLE_IMAGE.to_vec()),
        list => {
            let mut out = Vec::new();
            for name in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let m: Method = name.parse().map_err(|e| BenchError::Config(format!("methods: {e}")))?;
                if !out.contains(&m) {
                    out.push(m);
                }
            }
            if out.is_empty() {
                return Err(BenchError::Config("methods: empty list".into()));
            }
            Ok(out)
        }
    }
}

impl Settings {
    /// Read `[estimate]`; `methods` overrides the config's list.
    pub fn from_config(cfg: Option<&Config>, methods: Option<&str>) -> Result<Self> {
        let mut out = Settings::default();
        if let Some(cfg) = cfg {
            let mut s = cfg.section("estimate");
            let e = &mut out.estimator;
            if let Some(m) = s.raw("methods") {
                out.methods = parse_methods(&m)?;
            }
            e.n_points = s.get("n_points", e.n_points)?;
            e.lag_start = s.get("lag_start", e.lag_start)?;
            e.nllsr_lag_start = s.get("nllsr_lag_start", e.nllsr_lag_start)?;
            e.nllsr_order = s.get("nllsr_order", e.nllsr_order)?;
            e.acldr_order = s.get("acldr_order", e.acldr_order)?;
            e.epsilon_policy = s.get::<EpsilonPolicy>("epsilon", e.epsilon_policy)?;
            e.asnn_slope = s.get("asnn_slope", e.asnn_slope)?;
            e.asnn_intercept = s.get("asnn_intercept", e.asnn_intercept)?;
            e.axis = s.get::<Axis>("axis", e.axis)?;
            e.smart_shift = s.get("smart_shift", e.smart_shift)?;
            if let Some(p) = s.path("chillsr_correction") {
                e.chill_correction = load_correction(&p)?;
            }
            s.finish()?;
        }
        if let Some(m) = methods {
            out.methods = parse_methods(m)?;
        }
        out.estimator.validate().map_err(|e| BenchError::Config(format!("estimate: {e}")))?;
        Ok(out)
    }
}

pub fn load_correction(p: &Path) -> Result<QuadraticCorrection> {
    let text = fs::read_to_string(p).map_err(|e| BenchError::Config(format!("{}: {e}", p.display())))?;
    text.parse().map_err(|e| BenchError::Config(format!("{}: {e}", p.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub image_id: String,
    pub method: Method,
    pub status: String,
    pub oracle_snr: f64,
    pub snr_linear: Option<f64>,
    pub snr_db: Option<f64>,
    pub predicted_nf_peak: Option<f64>,
    pub runtime_ms: f64,
    pub error: Option<String>,
    pub diagnostics: serde_json::Value,
}

impl ResultRow {
    pub fn rel_error(&self) -> Option<f64> {
        let e = self.snr_linear?;
        (e.is_finite() && self.oracle_snr.is_finite() && self.oracle_snr > 0.0)
            .then(|| (e - self.oracle_snr) / self.oracle_snr)
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.image_id.clone(),
            self.method.name().into(),
            self.status.clone(),
            num(self.oracle_snr),
            opt(self.snr_linear),
            opt(self.snr_db),
            opt(self.rel_error()),
            opt(self.predicted_nf_peak),
            format!("{:.3}", self.runtime_ms),
        ]
    }
}

pub(crate) fn to_row(image_id: &str, oracle: f64, method: Method, o: &Outcome, runtime_ms: f64) -> ResultRow {
    let (snr, snr_db, peak, diag) = match o.estimate() {
        Some(e) => (Some(e.snr_linear), Some(e.snr_db), e.predicted_nf_peak, json!(e.diagnostics)),
        None => (None, None, None, json!({})),
    };
    let error = match o {
        Outcome::Failed(e) => Some(e.to_string()),
        _ => None,
    };
    ResultRow {
        image_id: image_id.to_string(),
        method,
        status: o.status().to_string(),
        oracle_snr: oracle,
        snr_linear: snr,
        snr_db,
        predicted_nf_peak: peak,
        runtime_ms,
        error,
        diagnostics: diag,
    }
}

fn estimate_entry(entry: &Entry, settings: &Settings) -> Result<Vec<ResultRow>> {
    let img = entry.load_noisy()?;
    let second = entry.load_second()?;
    let mut rows = Vec::with_capacity(settings.methods.len());
    for &m in &settings.methods {
        let t = Instant::now();
        let out = estimate_methods(&img, second.as_ref(), &settings.estimator, &[m]);
        let ms = t.elapsed().as_secs_f64() * 1e3;
        rows.push(to_row(&entry.id, entry.true_snr, m, &out[&m], ms));
    }
    Ok(rows)
}

/// Rows in manifest order, then method order.
pub fn run(entries: &[Entry], settings: &Settings, jobs: usize) -> Result<Vec<ResultRow>> {
    let per_image: Vec<Vec<ResultRow>> =
        pool(jobs)?.install(|| entries.par_iter().map(|e| estimate_entry(e, settings)).collect::<Result<_>>())?;
    Ok(per_image.into_iter().flatten().collect())
}

pub fn median(mut v: Vec<f64>) -> Option<f64> {
    v.retain(|x| !x.is_nan());
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub n: usize,
    pub n_finite: usize,
    pub median_abs_rel_error: Option<f64>,
    pub median_rel_error: Option<f64>,
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    methods
        .into_iter()
        .map(|m| {
            let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.method == m).collect();
            let errs: Vec<f64> = mine.iter().filter_map(|r| r.rel_error()).collect();
            SummaryRow {
                method: m,
                n: mine.len(),
                n_finite: errs.len(),
                median_abs_rel_error: median(errs.iter().map(|e| e.abs()).collect()),
                median_rel_error: median(errs),
            }
        })
        .collect()
}

pub fn summary_records(summary: &[SummaryRow]) -> Vec<Vec<String>> {
    summary
        .iter()
        .map(|s| {
            vec![
                s.method.name().into(),
                s.n.to_string(),
                s.n_finite.to_string(),
                opt(s.median_abs_rel_error),
                opt(s.median_rel_error),
            ]
        })
        .collect()
}

/// Write results.csv, diagnostics.jsonl and summary.csv into `out`.
pub fn write_outputs(out: &Path, rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;
    let records: Vec<Vec<String>> = rows.iter().map(ResultRow::record).collect();
    write_table(&out.join("results.csv"), &RESULTS_HEADER, &records)?;
    let mut jsonl = Vec::new();
    for r in rows {
        let line = json!({
            "image_id": r.image_id,
            "method": r.method.name(),
            "status": r.status,
            "error": r.error,
            "diagnostics": r.diagnostics,
        });
        writeln!(jsonl, "{line}").expect("in-memory write");
    }
    let p = out.join("diagnostics.jsonl");
    fs::write(&p, jsonl).map_err(|e| BenchError::io(&p, e))?;
    let summary = summarize(rows);
    write_table(&out.join("summary.csv"), &SUMMARY_HEADER, &summary_records(&summary))?;
    Ok(summary)
}

/// Fit the CHILLSR quadratic correction on a corpus, using raw (uncorrected)
/// estimates against the oracle SNR.
pub fn calibrate_chillsr(entries: &[Entry], estimator: &EstimatorConfig, jobs: usize) -> Result<QuadraticCorrection> {
    let mut raw = estimator.clone();
    raw.chill_correction = QuadraticCorrection::IDENTITY;
    let settings = Settings { estimator: raw, methods: vec![Method::Chillsr] };
    let rows = run(entries, &settings, jobs)?;
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.snr_linear.filter(|v| v.is_finite()).map(|v| (v, r.oracle_snr)))
        .collect();
    QuadraticCorrection::fit(&pairs).map_err(|e| BenchError::Data(format!("calibration: {e}")))
}
