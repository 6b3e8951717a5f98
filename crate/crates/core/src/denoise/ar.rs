//! Blind noise-variance estimate from the autocovariance.
//!
//! White noise only adds to the zero-lag autocovariance. A symmetric AR
//! predictor `c(m) ≈ Σ_k a_k (c(m−k) + c(m+k))`, fitted by least squares on
//! the noise-free lags, interpolates the missing noise-free c(0) from
//! c(±1..±N); the excess of the measured c(0) is the noise variance.

use crate::correlation::{autocorrelation, Axis};
use crate::error::{domain, Result};
use crate::linalg::lstsq;
use crate::raster::Raster;

pub const DEFAULT_AR_ORDER: usize = 3;

/// Lags used per order; the fit runs over lags `N+1..=LAG_SPAN·N − N`.
const LAG_SPAN: usize = 8;

/// Autocovariance averaged over the x and y profiles.
fn autocovariance(img: &Raster, max_lag: usize) -> Result<Vec<f64>> {
    let x = autocorrelation(img, max_lag, Axis::X)?;
    let y = autocorrelation(img, max_lag, Axis::Y)?;
    let mu2 = x.mean_sq();
    Ok(x.values.iter().zip(&y.values).map(|(a, b)| 0.5 * (a + b) - mu2).collect())
}

pub fn estimate_noise_variance_ar(img: &Raster, order: usize) -> Result<f64> {
    if order == 0 {
        return domain("ar order must be >= 1");
    }
    let side = img.width().min(img.height());
    let max_lag = (LAG_SPAN * order).min((side - 1) / 2);
    if max_lag < 3 * order {
        return domain(format!("{}x{} image too small for ar order {order}", img.width(), img.height()));
    }
    let c = autocovariance(img, max_lag)?;
    if !(c[0] > 0.0) {
        return Ok(0.0);
    }
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for m in order + 1..=max_lag - order {
        rows.push((1..=order).map(|k| c[m - k] + c[m + k]).collect::<Vec<f64>>());
        ys.push(c[m]);
    }
    let a = lstsq(&rows, &ys)?;
    let c0_clean: f64 = a.iter().enumerate().map(|(i, ak)| 2.0 * ak * c[i + 1]).sum();
    Ok((c[0] - c0_clean).max(0.0))
}
