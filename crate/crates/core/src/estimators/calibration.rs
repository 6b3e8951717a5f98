//! Quadratic post-correction of raw CHILLSR SNR values.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::linalg::lstsq_weighted;

/// `corrected = α raw² + β raw + γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticCorrection {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl QuadraticCorrection {
    pub const IDENTITY: Self = Self { alpha: 0.0, beta: 1.0, gamma: 0.0 };

    pub fn apply(&self, raw: f64) -> f64 {
        self.alpha * raw * raw + self.beta * raw + self.gamma
    }

    /// Fit on `(raw, true)` pairs, minimizing squared *relative* error so that
    /// high-SNR images do not dominate.
    pub fn fit(pairs: &[(f64, f64)]) -> Result<Self> {
        let pairs: Vec<(f64, f64)> =
            pairs.iter().copied().filter(|(r, t)| r.is_finite() && t.is_finite() && *t > 0.0).collect();
        if pairs.len() < 3 {
            return domain(format!("need at least 3 finite calibration pairs, got {}", pairs.len()));
        }
        let rows: Vec<Vec<f64>> = pairs.iter().map(|(r, _)| vec![r * r, *r, 1.0]).collect();
        let y: Vec<f64> = pairs.iter().map(|(_, t)| *t).collect();
        let w: Vec<f64> = pairs.iter().map(|(_, t)| 1.0 / (t * t)).collect();
        let c = lstsq_weighted(&rows, &y, &w)?;
        Ok(Self { alpha: c[0], beta: c[1], gamma: c[2] })
    }
}

impl Default for QuadraticCorrection {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Coefficients file: `alpha=..`, `beta=..`, `gamma=..` lines; `#` comments.
impl fmt::Display for QuadraticCorrection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# chillsr quadratic correction")?;
        writeln!(f, "alpha={}", self.alpha)?;
        writeln!(f, "beta={}", self.beta)?;
        writeln!(f, "gamma={}", self.gamma)
    }
}

impl FromStr for QuadraticCorrection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut c = Self::IDENTITY;
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Domain(format!("expected key=value, got {line:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Domain(format!("bad number for {}: {v:?}", k.trim())))?;
            match k.trim() {
                "alpha" => c.alpha = v,
                "beta" => c.beta = v,
                "gamma" => c.gamma = v,
                other => return domain(format!("unknown correction key {other:?}")),
            }
        }
        Ok(c)
    }
}
