use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semsnr_bench::config::Config;
use semsnr_bench::corpus::{self, CorpusSpec};
use semsnr_bench::csvio::{num, read_yield_table};
use semsnr_bench::denoise::{self, DenoiseSettings};
use semsnr_bench::estimate::{self, Settings};
use semsnr_bench::{report, sweep, BenchError, Result};
use semsnr_core::yield_snr::{snr_detected, snr_yield, BeamParams, Channel};

/// SNR estimation benchmarks on synthetic SEM-like images.
///
/// Exit codes: 0 success, 2 config error, 3 data error, 4 internal error.
#[derive(Parser)]
#[command(name = "semsnr", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Config file (flat key = value with [corpus], [estimate], [sweep], [denoise] sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a seeded corpus: per-image PGMs, recipe and truth, plus truth.csv and manifest.csv.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Override corpus.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run estimators over a corpus; writes results.csv, diagnostics.jsonl and summary.csv.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        /// Output directory; defaults to the corpus directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `all`, `single` or a comma-separated list (nn, fol, lsr, nllsr, asnn, acldr, chillsr, frank_alali, smart).
        #[arg(long)]
        methods: Option<String>,
    },
    /// Sensitivity sweep; writes sweep.csv, sweep_summary.csv and sweep.svg.
    ///
    /// Physical factors map onto synthetic analogs: `dose` is the mean number of
    /// primary electrons per pixel, `dwell` is the dwell time in seconds at
    /// sweep.beam_current amperes (dose = I t / e, the scan-rate analog), and
    /// `contrast` scales the detected image by λ at a fixed dose.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        methods: Option<String>,
        /// Override sweep.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Filter every corpus image; writes filtered PGMs, report.csv and denoise_summary.csv.
    ///
    /// Filter grammar: kind[:key=value,...] with kinds gaussian (sigma, radius),
    /// median (window), bilateral (sigma_s, sigma_r), wiener_global (noise_var),
    /// wiener_local (window, noise_var) and ar_wiener (order, window).
    Denoise {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Filter spec; repeat or separate with `;`.
        #[arg(long = "filter")]
        filters: Vec<String>,
        /// Estimator for before/after SNR columns.
        #[arg(long)]
        estimator: Option<String>,
    },
    /// Rebuild and print summaries from the CSVs in a results directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the CHILLSR quadratic correction on a corpus and write the coefficients file.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dose-limited SNR per row of a yield table (material, energy_keV, delta, eta, source).
    Yields {
        #[arg(long)]
        table: PathBuf,
        /// Probe current, amperes.
        #[arg(long)]
        current: f64,
        /// Dwell time per pixel, seconds.
        #[arg(long)]
        dwell: f64,
        #[arg(long, default_value_t = 1.0)]
        dqe: f64,
        /// Non-Poisson SE variance enhancement.
        #[arg(long, default_value_t = 1.0)]
        enhancement: f64,
    },
}

fn jobs(j: Option<usize>) -> Result<usize> {
    match j {
        Some(0) => Err(BenchError::Config("--jobs must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn load_config(p: Option<&Path>) -> Result<Option<Config>> {
    p.map(Config::load).transpose()
}

fn need_config(p: Option<&Path>) -> Result<Config> {
    load_config(p)?.ok_or_else(|| BenchError::Config("--config is required".into()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Generate { common, out, seed } => {
            let cfg = need_config(common.config.as_deref())?;
            let spec = CorpusSpec::from_config(&cfg, seed)?;
            let n = corpus::generate(&spec, &out, jobs(common.jobs)?)?;
            println!("wrote {n} images to {}", out.display());
        }
        Cmd::Estimate { common, corpus: dir, out, methods } => {
            let cfg = load_config(common.config.as_deref())?;
            let settings = Settings::from_config(cfg.as_ref(), methods.as_deref())?;
            let entries = corpus::load_corpus(&dir)?;
            let rows = estimate::run(&entries, &settings, jobs(common.jobs)?)?;
            let out = out.unwrap_or(dir);
            estimate::write_outputs(&out, &rows)?;
            print!("{}", report::report(&out)?);
        }
        Cmd::Sweep { common, out, methods, seed } => {
            let cfg = need_config(common.config.as_deref())?;
            let spec = sweep::SweepSpec::from_config(&cfg, methods.as_deref(), seed)?;
            let rows = sweep::run(&spec, jobs(common.jobs)?)?;
            sweep::write_outputs(&out, &spec, &rows)?;
            println!("wrote {} sweep rows to {}", rows.len(), out.display());
        }
        Cmd::Denoise { common, corpus: dir, out, filters, estimator } => {
            let cfg = load_config(common.config.as_deref())?;
            let settings = DenoiseSettings::from_config(cfg.as_ref(), &filters, estimator.as_deref())?;
            let entries = corpus::load_corpus(&dir)?;
            let rows = denoise::run(&entries, &settings, &out, jobs(common.jobs)?)?;
            denoise::write_outputs(&out, &rows)?;
            print!("{}", report::report(&out)?);
        }
        Cmd::Report { out } => print!("{}", report::report(&out)?),
        Cmd::Calibrate { common, corpus: dir, out } => {
            let cfg = load_config(common.config.as_deref())?;
            let settings = Settings::from_config(cfg.as_ref(), None)?;
            let entries = corpus::load_corpus(&dir)?;
            let c = estimate::calibrate_chillsr(&entries, &settings.estimator, jobs(common.jobs)?)?;
            std::fs::write(&out, c.to_string()).map_err(|e| BenchError::Data(format!("{}: {e}", out.display())))?;
            print!("{c}");
        }
        Cmd::Yields { table, current, dwell, dqe, enhancement } => {
            let beam = BeamParams { i_pe: current, dwell, dqe, b_enhancement: enhancement };
            beam.validate().map_err(|e| BenchError::Config(e.to_string()))?;
            println!("material,energy_keV,snr_pe,snr_bse,snr_se,snr_se_detected");
            for r in read_yield_table(&table)? {
                let cell = |c: Channel| snr_yield(&beam, r.delta, r.eta, c).ok();
                let se = cell(Channel::Se);
                let det = se.and_then(|s| snr_detected(s, dqe).ok());
                let f = |v: Option<f64>| v.map_or_else(String::new, num);
                println!(
                    "{},{},{},{},{},{}",
                    r.material,
                    num(r.energy_kev),
                    f(cell(Channel::Pe)),
                    f(cell(Channel::Bse)),
                    f(se),
                    f(det)
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(4),
    }
}
