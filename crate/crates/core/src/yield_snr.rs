//! Hardware-side SNR: specimen currents to yields, dose-limited SNR per
//! channel, detector efficiency, and the image-side mean/σ estimate with its
//! offset calibration.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::fit_line;
use crate::ELEMENTARY_CHARGE;

/// Beam and specimen currents, amperes. Tertiary SE current is neglected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldMeasurement {
    pub i_pe: f64,
    /// Specimen current with the specimen biased positive (SE suppressed).
    pub i_sc_pos: f64,
    /// Specimen current with the specimen biased negative.
    pub i_sc_neg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// Probe current, amperes.
    pub i_pe: f64,
    /// Dwell time per pixel, seconds.
    pub dwell: f64,
    pub dqe: f64,
    /// Non-Poisson enhancement k of the SE yield variance (1 = Poisson).
    pub b_enhancement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Pe,
    Bse,
    Se,
}

impl BeamParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.i_pe > 0.0 && self.dwell > 0.0) {
            return domain(format!("current and dwell must be positive, got {}, {}", self.i_pe, self.dwell));
        }
        if !(self.dqe > 0.0 && self.dqe <= 1.0) {
            return domain(format!("dqe must lie in (0, 1], got {}", self.dqe));
        }
        if !(self.b_enhancement >= 1.0) {
            return domain(format!("b_enhancement must be >= 1, got {}", self.b_enhancement));
        }
        Ok(())
    }
}

/// `(δ, η)` from the two biased specimen currents.
pub fn yields_from_currents(m: &YieldMeasurement) -> Result<(f64, f64)> {
    if !(m.i_pe > 0.0) {
        return Err(Error::InconsistentCurrents(format!("beam current {} must be positive", m.i_pe)));
    }
    if m.i_sc_pos < m.i_sc_neg {
        return Err(Error::InconsistentCurrents(format!(
            "positive-bias current {} below negative-bias current {}",
            m.i_sc_pos, m.i_sc_neg
        )));
    }
    if m.i_sc_pos > m.i_pe {
        return Err(Error::InconsistentCurrents(format!(
            "positive-bias current {} exceeds beam current {}",
            m.i_sc_pos, m.i_pe
        )));
    }
    let delta = (m.i_sc_pos - m.i_sc_neg) / m.i_pe;
    let eta = (m.i_pe - m.i_sc_pos) / m.i_pe;
    Ok((delta, eta))
}

/// Specimen currents implied by given yields (inverse of [`yields_from_currents`]).
pub fn currents_from_yields(i_pe: f64, delta: f64, eta: f64) -> YieldMeasurement {
    YieldMeasurement { i_pe, i_sc_pos: i_pe * (1.0 - eta), i_sc_neg: i_pe * (1.0 - eta - delta) }
}

/// Mean primary electrons per pixel, I τ / e.
pub fn dose_per_pixel(b: &BeamParams) -> Result<f64> {
    b.validate()?;
    Ok(b.i_pe * b.dwell / ELEMENTARY_CHARGE)
}

/// Dose-limited SNR (amplitude ratio) of one emission channel.
pub fn snr_yield(b: &BeamParams, delta: f64, eta: f64, channel: Channel) -> Result<f64> {
    let n = dose_per_pixel(b)?;
    match channel {
        Channel::Pe => Ok(n.sqrt()),
        Channel::Bse => {
            if !(eta > 0.0) {
                return domain(format!("BSE channel needs η > 0, got {eta}"));
            }
            Ok((n * eta).sqrt())
        }
        Channel::Se => {
            if !(delta > 0.0) {
                return domain(format!("SE channel needs δ > 0, got {delta}"));
            }
            Ok(snr_se(n, delta, b.b_enhancement))
        }
    }
}

/// `√(N̄ / (1 + k/δ))`.
pub fn snr_se(dose: f64, delta: f64, k: f64) -> f64 {
    (dose / (1.0 + k / delta)).sqrt()
}

/// SNR after a detector of quantum efficiency `dqe`.
pub fn snr_detected(snr_yield: f64, dqe: f64) -> Result<f64> {
    if !(dqe > 0.0 && dqe <= 1.0) {
        return domain(format!("dqe must lie in (0, 1], got {dqe}"));
    }
    Ok(dqe.sqrt() * snr_yield)
}

/// `(I_mean − I_DC) / σ`.
pub fn snr_from_image(i_mean: f64, i_dc: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Degenerate { r0: sigma, r_nf: sigma });
    }
    if !(i_mean > i_dc) {
        return Err(Error::NonpositiveSignal(format!("mean {i_mean} not above offset {i_dc}")));
    }
    Ok((i_mean - i_dc) / sigma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdcCalibration {
    pub i_dc: f64,
    /// Intensity per ampere.
    pub slope: f64,
    pub residuals: Vec<f64>,
    /// Standard error of the intercept.
    pub i_dc_stderr: f64,
}

/// Straight-line fit of mean intensity against beam current; the intercept is
/// the detector offset.
pub fn calibrate_idc(samples: &[(f64, f64)]) -> Result<IdcCalibration> {
    if samples.len() < 2 {
        return domain("need at least two (current, intensity) samples");
    }
    let x: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::Singular("all beam currents are identical".into()));
    }
    let (i_dc, slope) = fit_line(&x, &y)?;
    let residuals: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| yi - (i_dc + slope * xi)).collect();
    let n = x.len() as f64;
    let i_dc_stderr = if samples.len() > 2 {
        let s2 = residuals.iter().map(|r| r * r).sum::<f64>() / (n - 2.0);
        let mx = x.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
        (s2 * (1.0 / n + mx * mx / sxx)).sqrt()
    } else {
        0.0
    };
    Ok(IdcCalibration { i_dc, slope, residuals, i_dc_stderr })
}

// ---------------------------------------------------------------------------
// Yield tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldRow {
    pub material: String,
    #[serde(rename = "energy_keV")]
    pub energy_kev: f64,
    pub delta: f64,
    pub eta: f64,
    pub source: String,
}
