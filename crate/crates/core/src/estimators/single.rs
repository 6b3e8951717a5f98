//! Single-image estimators: each predicts the noise-free zero-lag ACF value
//! from the nonzero lags of one image.

use crate::correlation::{acf_at, autocorrelation, snr_from_peaks, AcfCurve, Axis};
use crate::error::{domain, Error, Result};
use crate::linalg::lstsq;
use crate::raster::Raster;

use super::levinson::{levinson_durbin, ArModel};
use super::pchip::Pchip;
use super::{EpsilonPolicy, EstimatorConfig, Method, SnrEstimate};

/// ACF samples shared by every single-image estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfInputs {
    pub curve: AcfCurve,
    /// Lag-1 value on the orthogonal axis (equal to `curve.r(1)` for radial).
    pub r_orth1: f64,
}

impl AcfInputs {
    pub fn compute(img: &Raster, max_lag: usize, axis: Axis) -> Result<Self> {
        let curve = autocorrelation(img, max_lag, axis)?;
        let r_orth1 = match axis {
            Axis::X => acf_at(img, 0, 1),
            Axis::Y => acf_at(img, 1, 0),
            Axis::Radial => curve.r(1),
        };
        Ok(Self { curve, r_orth1 })
    }

    fn need(&self, lag: usize) -> Result<()> {
        if lag > self.curve.max_lag() {
            return domain(format!("ACF computed to lag {}, need {lag}", self.curve.max_lag()));
        }
        Ok(())
    }

    fn finish(&self, method: Method, r_nf: f64) -> Result<SnrEstimate> {
        let snr = snr_from_peaks(self.curve.r0(), r_nf, self.curve.mean)?;
        Ok(SnrEstimate::new(method, snr, Some(r_nf)))
    }
}

fn epsilon_additive(values: &[f64], policy: EpsilonPolicy) -> f64 {
    match policy {
        EpsilonPolicy::Zero => 0.0,
        EpsilonPolicy::HalfGap => 0.5 * (values[0] - values[1]),
    }
}

// ---------------------------------------------------------------------------
// Nearest neighbour and first-order linear extrapolation
// ---------------------------------------------------------------------------

pub(crate) fn nn(inp: &AcfInputs) -> Result<SnrEstimate> {
    inp.need(1)?;
    let r1 = inp.curve.r(1);
    let r_nf = 0.5 * (r1 + inp.r_orth1);
    Ok(inp.finish(Method::Nn, r_nf)?.with("lag1", [r1, inp.r_orth1]))
}

pub(crate) fn fol(inp: &AcfInputs) -> Result<SnrEstimate> {
    inp.need(2)?;
    let (r1, r2) = (inp.curve.r(1), inp.curve.r(2));
    Ok(inp.finish(Method::Fol, 2.0 * r1 - r2)?.with("r1_r2", [r1, r2]))
}

pub(crate) fn asnn(inp: &AcfInputs, cfg: &EstimatorConfig) -> Result<SnrEstimate> {
    let base = nn(inp)?;
    let snr = cfg.asnn_slope * base.snr_linear - cfg.asnn_intercept;
    if !(snr > 0.0) {
        return Err(Error::DegenerateSnr { snr });
    }
    let (r0, mu2) = (inp.curve.r0(), inp.curve.mean_sq());
    let implied = (mu2 + snr * r0) / (1.0 + snr);
    Ok(SnrEstimate::new(Method::Asnn, snr, Some(implied))
        .with("base_snr", [base.snr_linear])
        .with("slope_intercept", [cfg.asnn_slope, cfg.asnn_intercept]))
}

// ---------------------------------------------------------------------------
// Linear least-squares regression
// ---------------------------------------------------------------------------

/// Line through `values[lag_start..lag_start + n]` evaluated at lag 0 plus ε.
/// Returns `(peak, α, β, ε)`.
pub fn lsr_peak(values: &[f64], cfg: &EstimatorConfig) -> Result<(f64, f64, f64, f64)> {
    let lags: Vec<usize> = (cfg.lag_start..cfg.lag_start + cfg.n_points).collect();
    if *lags.last().expect("n_points >= 1") >= values.len() {
        return domain("not enough ACF lags for the LSR window");
    }
    let rows: Vec<Vec<f64>> = lags.iter().map(|&k| vec![1.0, k as f64]).collect();
    let y: Vec<f64> = lags.iter().map(|&k| values[k]).collect();
    let c = lstsq(&rows, &y)?;
    let eps = epsilon_additive(values, cfg.epsilon_policy);
    Ok((c[0] + eps, c[0], c[1], eps))
}

pub(crate) fn lsr(inp: &AcfInputs, cfg: &EstimatorConfig) -> Result<SnrEstimate> {
    let (peak, alpha, beta, eps) = lsr_peak(&inp.curve.values, cfg)?;
    Ok(inp.finish(Method::Lsr, peak)?.with("alpha_beta_epsilon", [alpha, beta, eps]))
}

// ---------------------------------------------------------------------------
// Log-log (power law) regression
// ---------------------------------------------------------------------------

/// Fit `ln r = Σ_j b_j (ln X)^j` over the NLLSR window and evaluate at X = 1,
/// times a multiplicative ε. Returns `(peak, coefficients, ε)`.
pub fn nllsr_peak(values: &[f64], cfg: &EstimatorConfig) -> Result<(f64, Vec<f64>, f64)> {
    let lags: Vec<usize> = (cfg.nllsr_lag_start..cfg.nllsr_lag_start + cfg.n_points).collect();
    if *lags.last().expect("n_points >= 1") >= values.len() {
        return domain("not enough ACF lags for the NLLSR window");
    }
    for &k in &lags {
        if !(values[k] > 0.0) {
            return Err(Error::LogDomain { lag: k, value: values[k] });
        }
    }
    let rows: Vec<Vec<f64>> = lags
        .iter()
        .map(|&k| (0..=cfg.nllsr_order).map(|j| (k as f64).ln().powi(j as i32)).collect())
        .collect();
    let y: Vec<f64> = lags.iter().map(|&k| values[k].ln()).collect();
    let b = lstsq(&rows, &y)?;
    let eps = match cfg.epsilon_policy {
        EpsilonPolicy::Zero => 1.0,
        EpsilonPolicy::HalfGap => {
            if !(values[0] > 0.0 && values[1] > 0.0) {
                return Err(Error::LogDomain { lag: 0, value: values[0].min(values[1]) });
            }
            (0.5 * (values[0].ln() - values[1].ln())).exp()
        }
    };
    Ok((b[0].exp() * eps, b, eps))
}

pub(crate) fn nllsr(inp: &AcfInputs, cfg: &EstimatorConfig) -> Result<SnrEstimate> {
    let (peak, b, eps) = nllsr_peak(&inp.curve.values, cfg)?;
    Ok(inp.finish(Method::Nllsr, peak)?.with("log_coefficients", b).with("epsilon", [eps]))
}

// ---------------------------------------------------------------------------
// Levinson–Durbin extrapolation
// ---------------------------------------------------------------------------

const ACLDR_GRID: usize = 4000;

fn acldr_objective(c: &[f64], z: f64, order: usize, fit_lags: usize) -> (f64, Option<ArModel>) {
    let mut seq = Vec::with_capacity(order + 1);
    seq.push(z);
    seq.extend_from_slice(&c[1..=order]);
    match levinson_durbin(&seq, order) {
        Ok(ar) => {
            let j = (order + 1..=order + fit_lags)
                .map(|m| {
                    let e = c[m] + (1..=order).map(|k| ar.a[k] * c[m - k]).sum::<f64>();
                    e * e
                })
                .sum();
            (j, Some(ar))
        }
        Err(_) => (f64::INFINITY, None),
    }
}

/// Noise-free zero-lag value whose AR(`order`) Yule–Walker model, fitted on
/// `[z, c(1), .., c(order)]`, best predicts the following `fit_lags`
/// autocovariance samples. Works on the autocovariance `c(k) = r(k) − μ²`
/// scaled by `c(0)`, searching `z` over `(0, 1]`.
///
/// Returns `(peak, model, z)` with `peak = z c(0) + μ²`.
pub fn acldr_peak(
    values: &[f64],
    mu2: f64,
    order: usize,
    fit_lags: usize,
) -> Result<(f64, ArModel, f64)> {
    if order < 1 || fit_lags < 1 {
        return domain("ACLDR needs order >= 1 and at least one fitted lag");
    }
    if order + fit_lags >= values.len() {
        return domain(format!(
            "ACLDR order {order} with {fit_lags} fitted lags needs ACF to lag {}",
            order + fit_lags
        ));
    }
    let c0 = values[0] - mu2;
    if !(c0 > 1e-12 * values[0].abs()) {
        return Err(Error::Degenerate { r0: values[0], r_nf: values[0] });
    }
    let c: Vec<f64> = values[..=order + fit_lags].iter().map(|v| (v - mu2) / c0).collect();
    let obj = |z: f64| acldr_objective(&c, z, order, fit_lags).0;

    let grid: Vec<f64> = (1..=ACLDR_GRID).map(|i| i as f64 / ACLDR_GRID as f64).collect();
    let (best_i, best_j) = grid
        .iter()
        .enumerate()
        .map(|(i, &z)| (i, obj(z)))
        .fold((0, f64::INFINITY), |b, (i, j)| if j < b.1 { (i, j) } else { b });
    if !best_j.is_finite() {
        return Err(Error::NonStationary { stage: order, reflection: 1.0 });
    }
    let mut lo = grid[best_i.saturating_sub(1)];
    let mut hi = grid[(best_i + 1).min(ACLDR_GRID - 1)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if obj(x1) < obj(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let refined = 0.5 * (lo + hi);
    let z = if obj(refined) <= best_j { refined } else { grid[best_i] };
    let (_, ar) = acldr_objective(&c, z, order, fit_lags);
    let ar = ar.expect("finite objective implies a stationary model");
    Ok((z * c0 + mu2, ar, z))
}

pub(crate) fn acldr(inp: &AcfInputs, cfg: &EstimatorConfig) -> Result<SnrEstimate> {
    let (peak, ar, z) =
        acldr_peak(&inp.curve.values, inp.curve.mean_sq(), cfg.acldr_order, cfg.n_points)?;
    Ok(inp
        .finish(Method::Acldr, peak)?
        .with("z", [z])
        .with("ar_coefficients", ar.a[1..].to_vec())
        .with("reflection", ar.reflection.clone())
        .with("prediction_error", ar.errors.clone()))
}

// ---------------------------------------------------------------------------
// Cubic Hermite extrapolation
// ---------------------------------------------------------------------------

/// PCHIP through `(k, r(k))`, k = 1..=`knots`, evaluated at lag 0.
/// Returns `(peak, knot slopes)`.
pub fn chillsr_peak(values: &[f64], knots: usize) -> Result<(f64, Vec<f64>)> {
    if knots < 4 || knots >= values.len() {
        return domain(format!("CHILLSR needs 4..{} knots, got {knots}", values.len() - 1));
    }
    let x: Vec<f64> = (1..=knots).map(|k| k as f64).collect();
    let p = Pchip::new(&x, &values[1..=knots])?;
    Ok((p.eval(0.0), p.slopes().to_vec()))
}

pub(crate) fn chillsr(inp: &AcfInputs, cfg: &EstimatorConfig) -> Result<SnrEstimate> {
    let (peak, slopes) = chillsr_peak(&inp.curve.values, cfg.n_points.max(4))?;
    let raw = snr_from_peaks(inp.curve.r0(), peak, inp.curve.mean)?;
    let corr = &cfg.chill_correction;
    let snr = corr.apply(raw);
    if !(snr > 0.0) {
        return Err(Error::DegenerateSnr { snr });
    }
    Ok(SnrEstimate::new(Method::Chillsr, snr, Some(peak))
        .with("raw_snr", [raw])
        .with("knot_slopes", slopes)
        .with("correction", [corr.alpha, corr.beta, corr.gamma]))
}

// ---------------------------------------------------------------------------
// Image entry points
// ---------------------------------------------------------------------------

fn inputs(img: &Raster, cfg: &EstimatorConfig) -> Result<AcfInputs> {
    cfg.validate()?;
    AcfInputs::compute(img, cfg.max_lag(), cfg.axis)
}

pub fn estimate_nn(img: &Raster) -> Result<SnrEstimate> {
    nn(&AcfInputs::compute(img, 1, Axis::X)?)
}

pub fn estimate_fol(img: &Raster) -> Result<SnrEstimate> {
    fol(&AcfInputs::compute(img, 2, Axis::X)?)
}

pub fn estimate_lsr(img: &Raster, cfg: &EstimatorConfig) -> Result<SnrEstimate> {
    lsr(&inputs(img, cfg)?, cfg)
}

pub fn estimate_nllsr(img: &Raster, cfg: &EstimatorConfig) -> Result<SnrEstimate> {
    nllsr(&inputs(img, cfg)?, cfg)
}

pub fn estimate_asnn(img: &Raster, cfg: &EstimatorConfig) -> Result<SnrEstimate> {
    asnn(&inputs(img, cfg)?, cfg)
}

pub fn estimate_acldr(img: &Raster, cfg: &EstimatorConfig) -> Result<SnrEstimate> {
    acldr(&inputs(img, cfg)?, cfg)
}

pub fn estimate_chillsrsnr(img: &Raster, cfg: &EstimatorConfig) -> Result<SnrEstimate> {
    chillsr(&inputs(img, cfg)?, cfg)
}

/// Direct Toeplitz solve used to cross-check the recursion in tests.
#[cfg(test)]
pub(crate) fn toeplitz_ar(acf: &[f64], order: usize) -> Result<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..order)
        .map(|i| (0..order).map(|j| acf[i.abs_diff(j)]).collect())
        .collect();
    let b: Vec<f64> = (1..=order).map(|i| -acf[i]).collect();
    crate::linalg::solve(a, b)
}
