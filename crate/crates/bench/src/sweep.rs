//! Sensitivity sweeps on synthetic acquisitions. Instrument factors map onto
//! simulator knobs: `dose` sets the mean primary electrons per pixel, `dwell`
//! sets the dwell time at a fixed probe current (dose = I·t/e), and
//! `contrast` rescales the detected image by λ.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use semsnr_core::estimators::{estimate_methods, Method};
use semsnr_core::rng::derive_seed;
use semsnr_core::synth::simulate;
use semsnr_core::yield_snr::{dose_per_pixel, BeamParams};

use crate::config::Config;
use crate::corpus::{pool, Scene};
use crate::csvio::{num, opt, write_table};
use crate::error::{BenchError, Result};
use crate::estimate::{median, parse_methods, to_row, Settings};
use crate::svg::{LinePlot, Series};

pub const SWEEP_HEADER: [&str; 10] = [
    "parameter",
    "value",
    "seed_index",
    "method",
    "status",
    "oracle_snr",
    "shot_snr",
    "snr_linear",
    "rel_error",
    "runtime_ms",
];

pub const SWEEP_SUMMARY_HEADER: [&str; 7] =
    ["parameter", "value", "method", "n_finite", "median_snr", "median_oracle_snr", "median_shot_snr"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameter {
    Dose,
    Dwell,
    Contrast,
}

impl FromStr for Parameter {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dose" => Ok(Parameter::Dose),
            "dwell" => Ok(Parameter::Dwell),
            "contrast" => Ok(Parameter::Contrast),
            _ => Err(format!("unknown sweep parameter {s:?} (dose, dwell, contrast)")),
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parameter::Dose => "dose",
            Parameter::Dwell => "dwell",
            Parameter::Contrast => "contrast",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: Parameter,
    pub values: Vec<f64>,
    pub scene: Scene,
    pub seeds: usize,
    pub seed: u64,
    /// Probe current in amperes for dwell sweeps.
    pub beam_current: f64,
    /// Mean dose for contrast sweeps.
    pub base_dose: f64,
    pub settings: Settings,
}

impl SweepSpec {
    pub fn from_config(cfg: &Config, methods: Option<&str>, seed_override: Option<u64>) -> Result<Self> {
        if !cfg.has_section("sweep") {
            return Err(BenchError::Config("missing [sweep] section".into()));
        }
        let mut settings = Settings::from_config(Some(cfg), None)?;
        settings.methods = Method::SINGLE_IMAGE.iter().copied().chain([Method::Smart]).collect();
        let mut s = cfg.section("sweep");
        let parameter: Parameter = s.get("parameter", Parameter::Dose)?;
        let defaults = Scene { model: "poisson_pe".into(), bit_depth: 16, ..Scene::default() };
        let scene = Scene::read(&mut s, defaults)?;
        let values = s.list::<f64>("values")?.unwrap_or_default();
        let seeds = s.get("seeds", 3usize)?;
        let seed = s.get("seed", 1u64)?;
        let beam_current = s.get("beam_current", 1.602_176_634e-11)?;
        let base_dose = s.get("base_dose", 100.0)?;
        if let Some(m) = s.raw("methods") {
            settings.methods = parse_methods(&m)?;
        }
        s.check("values", !values.is_empty(), "sweep range is empty")?;
        s.check("values", values.iter().all(|v| *v > 0.0 && v.is_finite()), "values must be positive")?;
        s.check("values", values.windows(2).all(|w| w[0] < w[1]), "values must be strictly increasing")?;
        s.check("seeds", seeds >= 1, "needs at least one seed")?;
        s.check("beam_current", beam_current > 0.0, "must be positive")?;
        s.check("base_dose", base_dose > 0.0, "must be positive")?;
        if parameter != Parameter::Contrast {
            s.check("model", scene.level_is_dose(), "dose and dwell sweeps need a counting model")?;
        }
        s.finish()?;
        if let Some(m) = methods {
            settings.methods = parse_methods(m)?;
        }
        Ok(Self { parameter, values, scene, seeds, seed: seed_override.unwrap_or(seed), beam_current, base_dose, settings })
    }

    /// Simulator level (dose or target SNR) and image scale for one value.
    fn level(&self, value: f64) -> Result<(f64, f64)> {
        match self.parameter {
            Parameter::Dose => Ok((value, 1.0)),
            Parameter::Dwell => {
                let b = BeamParams { i_pe: self.beam_current, dwell: value, dqe: 1.0, b_enhancement: 1.0 };
                Ok((dose_per_pixel(&b)?, 1.0))
            }
            Parameter::Contrast => {
                let level = if self.scene.level_is_dose() { self.base_dose } else { 5.0 };
                Ok((level, value))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub seed_index: usize,
    pub method: Method,
    pub status: String,
    pub oracle_snr: f64,
    pub shot_snr: f64,
    pub snr_linear: Option<f64>,
    pub rel_error: Option<f64>,
    pub runtime_ms: f64,
}

fn run_point(spec: &SweepSpec, vi: usize, si: usize) -> Result<Vec<SweepRow>> {
    let value = spec.values[vi];
    let (level, scale) = spec.level(value)?;
    let scene_seed = derive_seed(spec.seed, si as u64);
    // Contrast rescales one realization, so every value shares the noise draw.
    let stream = if spec.parameter == Parameter::Contrast { 1 } else { vi as u64 + 1 };
    let noise_seed = derive_seed(scene_seed, stream);
    let mut recipe = spec.scene.recipe(level, scene_seed, noise_seed)?;
    let g = simulate(&recipe)?;
    let second = if spec.settings.methods.contains(&Method::FrankAlali) {
        recipe.stream = 1;
        Some(simulate(&recipe)?.noisy.map(|v| v * scale)?)
    } else {
        None
    };
    let img = g.noisy.map(|v| v * scale)?;
    let shot_snr = g.clean.stats().mean / g.noise_energy.sqrt();
    let mut rows = Vec::new();
    for &m in &spec.settings.methods {
        let t = Instant::now();
        let out = estimate_methods(&img, second.as_ref(), &spec.settings.estimator, &[m]);
        let ms = t.elapsed().as_secs_f64() * 1e3;
        let r = to_row("", g.true_snr, m, &out[&m], ms);
        rows.push(SweepRow {
            value,
            seed_index: si,
            method: m,
            status: r.status.clone(),
            oracle_snr: g.true_snr,
            shot_snr,
            snr_linear: r.snr_linear,
            rel_error: r.rel_error(),
            runtime_ms: ms,
        });
    }
    Ok(rows)
}

pub fn run(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>> {
    let points: Vec<(usize, usize)> =
        (0..spec.values.len()).flat_map(|vi| (0..spec.seeds).map(move |si| (vi, si))).collect();
    let rows: Vec<Vec<SweepRow>> =
        pool(jobs)?.install(|| points.par_iter().map(|&(vi, si)| run_point(spec, vi, si)).collect::<Result<_>>())?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub value: f64,
    pub method: Method,
    pub n_finite: usize,
    pub median_snr: Option<f64>,
    pub median_oracle_snr: Option<f64>,
    pub median_shot_snr: Option<f64>,
}

pub fn summarize(spec: &SweepSpec, rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut out = Vec::new();
    for &value in &spec.values {
        for &m in &spec.settings.methods {
            let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.value == value && r.method == m).collect();
            let est: Vec<f64> = mine.iter().filter_map(|r| r.snr_linear).filter(|v| v.is_finite()).collect();
            out.push(SweepSummary {
                value,
                method: m,
                n_finite: est.len(),
                median_snr: median(est),
                median_oracle_snr: median(mine.iter().map(|r| r.oracle_snr).collect()),
                median_shot_snr: median(mine.iter().map(|r| r.shot_snr).collect()),
            });
        }
    }
    out
}

/// Write sweep.csv, sweep_summary.csv and sweep.svg.
pub fn write_outputs(out: &Path, spec: &SweepSpec, rows: &[SweepRow]) -> Result<Vec<SweepSummary>> {
    std::fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;
    let p = spec.parameter.to_string();
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                p.clone(),
                num(r.value),
                r.seed_index.to_string(),
                r.method.name().into(),
                r.status.clone(),
                num(r.oracle_snr),
                num(r.shot_snr),
                opt(r.snr_linear),
                opt(r.rel_error),
                format!("{:.3}", r.runtime_ms),
            ]
        })
        .collect();
    write_table(&out.join("sweep.csv"), &SWEEP_HEADER, &records)?;
    let summary = summarize(spec, rows);
    let srec: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                p.clone(),
                num(s.value),
                s.method.name().into(),
                s.n_finite.to_string(),
                opt(s.median_snr),
                opt(s.median_oracle_snr),
                opt(s.median_shot_snr),
            ]
        })
        .collect();
    write_table(&out.join("sweep_summary.csv"), &SWEEP_SUMMARY_HEADER, &srec)?;

    let mut plot = LinePlot::new(&format!("SNR vs {p}"), &p, "SNR (linear)");
    let oracle: Vec<(f64, f64)> = spec
        .values
        .iter()
        .filter_map(|&v| summary.iter().find(|s| s.value == v).and_then(|s| s.median_oracle_snr).map(|o| (v, o)))
        .collect();
    plot.series.push(Series { name: "oracle".into(), points: oracle, dashed: true });
    for &m in &spec.settings.methods {
        let pts = summary.iter().filter(|s| s.method == m).filter_map(|s| s.median_snr.map(|y| (s.value, y))).collect();
        plot.series.push(Series { name: m.name().into(), points: pts, dashed: false });
    }
    let svg = out.join("sweep.svg");
    std::fs::write(&svg, plot.render()).map_err(|e| BenchError::io(&svg, e))?;
    Ok(summary)
}
