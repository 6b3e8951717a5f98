//! Filter runs over a corpus, scored against the clean images.

use std::path::Path;

use rayon::prelude::*;
use semsnr_core::denoise::{denoise, psnr, FilterSpec};
use semsnr_core::estimators::{estimate_methods, EstimatorConfig, Method};
use semsnr_core::raster::save_pgm;
use semsnr_core::Raster;

use crate::config::{Config, Flag};
use crate::corpus::{pool, Entry};
use crate::csvio::{num, opt, write_table};
use crate::error::{BenchError, Result};
use crate::estimate::median;

pub const DENOISE_HEADER: [&str; 10] = [
    "image_id",
    "filter",
    "status",
    "mse_input",
    "mse_output",
    "psnr_input_db",
    "psnr_db",
    "estimated_noise_variance",
    "snr_before",
    "snr_after",
];

pub const DENOISE_SUMMARY_HEADER: [&str; 5] = ["filter", "n", "median_mse_input", "median_mse", "median_psnr_db"];

#[derive(Debug, Clone)]
pub struct DenoiseSettings {
    pub filters: Vec<FilterSpec>,
    /// Single-image estimator for before/after SNR, if any.
    pub estimator: Option<Method>,
    pub estimator_config: EstimatorConfig,
    pub write_images: bool,
}

/// Filter specs separated by `;` (specs themselves contain commas).
pub fn parse_filters(s: &str) -> Result<Vec<FilterSpec>> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|e| BenchError::Config(format!("filter {t:?}: {e}"))))
        .collect()
}

impl DenoiseSettings {
    pub fn from_config(cfg: Option<&Config>, filters: &[String], estimator: Option<&str>) -> Result<Self> {
        let mut out = DenoiseSettings {
            filters: Vec::new(),
            estimator: None,
            estimator_config: EstimatorConfig::default(),
            write_images: true,
        };
        if let Some(cfg) = cfg {
            out.estimator_config = crate::estimate::Settings::from_config(Some(cfg), None)?.estimator;
            let mut s = cfg.section("denoise");
            if let Some(f) = s.raw("filters") {
                out.filters = parse_filters(&f)?;
            }
            out.estimator = s.opt::<Method>("estimator")?;
            let Flag(w) = s.get("write_images", Flag(true))?;
            out.write_images = w;
            s.finish()?;
        }
        if !filters.is_empty() {
            out.filters = filters.iter().map(|f| parse_filters(f)).collect::<Result<Vec<_>>>()?.concat();
        }
        if let Some(m) = estimator {
            out.estimator = Some(m.parse().map_err(|e| BenchError::Config(format!("estimator: {e}")))?);
        }
        if out.filters.is_empty() {
            return Err(BenchError::Config("no filters given (--filter or denoise.filters)".into()));
        }
        if let Some(m) = out.estimator {
            if !Method::SINGLE_IMAGE.contains(&m) && m != Method::Smart {
                return Err(BenchError::Config(format!("estimator {m} needs a second image")));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseRow {
    pub image_id: String,
    pub filter: String,
    pub status: String,
    pub mse_input: f64,
    pub mse_output: Option<f64>,
    pub psnr_input_db: f64,
    pub psnr_db: Option<f64>,
    pub estimated_noise_variance: Option<f64>,
    pub snr_before: Option<f64>,
    pub snr_after: Option<f64>,
}

fn snr_of(img: &Raster, settings: &DenoiseSettings) -> Option<f64> {
    let m = settings.estimator?;
    estimate_methods(img, None, &settings.estimator_config, &[m])[&m].estimate().map(|e| e.snr_linear)
}

fn run_entry(entry: &Entry, settings: &DenoiseSettings, out: &Path) -> Result<Vec<DenoiseRow>> {
    let img = entry.load_noisy()?;
    let clean = entry.load_clean()?;
    let mse_input = img.mse(&clean)?;
    let snr_before = snr_of(&img, settings);
    let mut rows = Vec::new();
    for (i, spec) in settings.filters.iter().enumerate() {
        let base = DenoiseRow {
            image_id: entry.id.clone(),
            filter: spec.to_string(),
            status: "ok".into(),
            mse_input,
            mse_output: None,
            psnr_input_db: psnr(mse_input, img.maxval()),
            psnr_db: None,
            estimated_noise_variance: None,
            snr_before,
            snr_after: None,
        };
        let row = match denoise(&img, spec, Some(&clean)) {
            Ok(rep) => {
                if settings.write_images {
                    let dir = out.join("filtered").join(&entry.id);
                    std::fs::create_dir_all(&dir).map_err(|e| BenchError::io(&dir, e))?;
                    save_pgm(&rep.output, dir.join(format!("{i:02}_{}.pgm", spec.kind())))?;
                }
                DenoiseRow {
                    mse_output: rep.mse_vs_reference,
                    psnr_db: rep.psnr_db,
                    estimated_noise_variance: rep.estimated_noise_variance,
                    snr_after: snr_of(&rep.output, settings),
                    ..base
                }
            }
            Err(e) => DenoiseRow { status: e.status().to_string(), ..base },
        };
        rows.push(row);
    }
    Ok(rows)
}

pub fn run(entries: &[Entry], settings: &DenoiseSettings, out: &Path, jobs: usize) -> Result<Vec<DenoiseRow>> {
    std::fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;
    let rows: Vec<Vec<DenoiseRow>> =
        pool(jobs)?.install(|| entries.par_iter().map(|e| run_entry(e, settings, out)).collect::<Result<_>>())?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn summary_records(rows: &[DenoiseRow]) -> Vec<Vec<String>> {
    let mut filters: Vec<&str> = Vec::new();
    for r in rows {
        if !filters.contains(&r.filter.as_str()) {
            filters.push(&r.filter);
        }
    }
    filters
        .into_iter()
        .map(|f| {
            let mine: Vec<&DenoiseRow> = rows.iter().filter(|r| r.filter == f).collect();
            vec![
                f.to_string(),
                mine.len().to_string(),
                opt(median(mine.iter().map(|r| r.mse_input).collect())),
                opt(median(mine.iter().filter_map(|r| r.mse_output).collect())),
                opt(median(mine.iter().filter_map(|r| r.psnr_db).filter(|v| v.is_finite()).collect())),
            ]
        })
        .collect()
}

/// Write report.csv and denoise_summary.csv.
pub fn write_outputs(out: &Path, rows: &[DenoiseRow]) -> Result<()> {
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.image_id.clone(),
                r.filter.clone(),
                r.status.clone(),
                num(r.mse_input),
                opt(r.mse_output),
                num(r.psnr_input_db),
                opt(r.psnr_db),
                opt(r.estimated_noise_variance),
                opt(r.snr_before),
                opt(r.snr_after),
            ]
        })
        .collect();
    write_table(&out.join("report.csv"), &DENOISE_HEADER, &records)?;
    write_table(&out.join("denoise_summary.csv"), &DENOISE_SUMMARY_HEADER, &summary_records(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_lists() {
        let f = parse_filters("median:window=3; wiener_local:window=7,noise_var=25").unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[1], FilterSpec::WienerLocal { window: 7, noise_var: 25.0 });
        assert_eq!(parse_filters("median:window=2").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn settings_need_filters() {
        assert!(DenoiseSettings::from_config(None, &[], None).is_err());
        let s = DenoiseSettings::from_config(None, &["median".into()], Some("nn")).unwrap();
        assert_eq!(s.estimator, Some(Method::Nn));
        assert!(DenoiseSettings::from_config(None, &["median".into()], Some("frank_alali")).is_err());
    }
}
