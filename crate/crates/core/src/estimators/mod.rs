//! SNR estimators behind one interface.
//!
//! Single-image methods predict the noise-free zero-lag ACF value from the
//! nonzero lags and share [`crate::correlation::snr_from_peaks`] as the back end.
//! Two-image methods work from a correlation coefficient, SNR = ρ/(1 − ρ).

mod calibration;
mod levinson;
mod pchip;
mod single;
mod two_image;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use calibration::QuadraticCorrection;
pub use levinson::{levinson_durbin, ArModel};
pub use pchip::Pchip;
pub use single::{
    acldr_peak, chillsr_peak, estimate_acldr, estimate_asnn, estimate_chillsrsnr, estimate_fol,
    estimate_lsr, estimate_nllsr, estimate_nn, lsr_peak, nllsr_peak, AcfInputs,
};
pub use two_image::{estimate_frank_alali, estimate_smart, pearson};

use crate::correlation::{db, Axis};
use crate::error::{domain, Error, Result};
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Nn,
    Fol,
    Lsr,
    Nllsr,
    Asnn,
    Acldr,
    Chillsr,
    FrankAlali,
    Smart,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Nn,
        Method::Fol,
        Method::Lsr,
        Method::Nllsr,
        Method::Asnn,
        Method::Acldr,
        Method::Chillsr,
        Method::FrankAlali,
        Method::Smart,
    ];

    /// The seven ACF-extrapolation estimators.
    pub const SINGLE_IMAGE: [Method; 7] = [
        Method::Nn,
        Method::Fol,
        Method::Lsr,
        Method::Nllsr,
        Method::Asnn,
        Method::Acldr,
        Method::Chillsr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Nn => "nn",
            Method::Fol => "fol",
            Method::Lsr => "lsr",
            Method::Nllsr => "nllsr",
            Method::Asnn => "asnn",
            Method::Acldr => "acldr",
            Method::Chillsr => "chillsr",
            Method::FrankAlali => "frank_alali",
            Method::Smart => "smart",
        }
    }

    pub fn needs_second_image(&self) -> bool {
        matches!(self, Method::FrankAlali)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .map_or_else(|| domain(format!("unknown method {s:?}")), Ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonPolicy {
    /// No offset added to the extrapolated peak.
    Zero,
    /// Half the gap between the noisy peak and the first lag.
    HalfGap,
}

impl FromStr for EpsilonPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(EpsilonPolicy::Zero),
            "half_gap" => Ok(EpsilonPolicy::HalfGap),
            _ => domain(format!("unknown epsilon policy {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    /// ACF samples used by the fitting methods.
    pub n_points: usize,
    /// First lag of the LSR fit.
    pub lag_start: usize,
    /// First lag of the NLLSR fit.
    pub nllsr_lag_start: usize,
    /// Polynomial order in ln X of the NLLSR fit.
    pub nllsr_order: usize,
    /// AR order of the ACLDR predictor.
    pub acldr_order: usize,
    pub epsilon_policy: EpsilonPolicy,
    pub asnn_slope: f64,
    pub asnn_intercept: f64,
    pub chill_correction: QuadraticCorrection,
    pub axis: Axis,
    /// Displacement of the second SMART region, pixels.
    pub smart_shift: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            n_points: 4,
            lag_start: 1,
            nllsr_lag_start: 2,
            nllsr_order: 1,
            acldr_order: 2,
            epsilon_policy: EpsilonPolicy::Zero,
            asnn_slope: 0.99744,
            asnn_intercept: 0.00645,
            chill_correction: QuadraticCorrection::IDENTITY,
            axis: Axis::X,
            smart_shift: 4,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return domain(format!("n_points must be >= 2, got {}", self.n_points));
        }
        if self.lag_start < 1 {
            return domain("lag_start must be >= 1");
        }
        if self.nllsr_lag_start < 2 {
            return domain("nllsr_lag_start must be >= 2");
        }
        if self.nllsr_order < 1 || self.nllsr_order >= self.n_points {
            return domain(format!(
                "nllsr_order must lie in [1, n_points), got {}",
                self.nllsr_order
            ));
        }
        if self.acldr_order < 1 {
            return domain("acldr_order must be >= 1");
        }
        if self.smart_shift < 1 {
            return domain("smart_shift must be >= 1");
        }
        Ok(())
    }

    /// Largest ACF lag any single-image method reads.
    pub fn max_lag(&self) -> usize {
        let lsr = self.lag_start + self.n_points - 1;
        let nllsr = self.nllsr_lag_start + self.n_points - 1;
        let acldr = self.acldr_order + self.n_points;
        let chill = self.n_points.max(4);
        [2, lsr, nllsr, acldr, chill].into_iter().max().expect("non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrEstimate {
    pub method: Method,
    pub snr_linear: f64,
    pub snr_db: f64,
    /// Predicted noise-free zero-lag ACF value (single-image methods).
    pub predicted_nf_peak: Option<f64>,
    pub diagnostics: BTreeMap<String, Vec<f64>>,
}

impl SnrEstimate {
    pub(crate) fn new(method: Method, snr: f64, peak: Option<f64>) -> Self {
        Self {
            method,
            snr_linear: snr,
            snr_db: db(snr),
            predicted_nf_peak: peak,
            diagnostics: BTreeMap::new(),
        }
    }

    pub(crate) fn with(mut self, key: &str, values: impl Into<Vec<f64>>) -> Self {
        self.diagnostics.insert(key.to_string(), values.into());
        self
    }

    /// `"ok"`, or `"infinite"` for the noise-free sentinel.
    pub fn status(&self) -> &'static str {
        if self.snr_linear.is_infinite() { "infinite" } else { "ok" }
    }
}

#[derive(Debug)]
pub enum Outcome {
    Done(SnrEstimate),
    Failed(Error),
    NotApplicable,
}

impl Outcome {
    pub fn status(&self) -> &'static str {
        match self {
            Outcome::Done(e) => e.status(),
            Outcome::Failed(e) => e.status(),
            Outcome::NotApplicable => "not_applicable",
        }
    }

    pub fn estimate(&self) -> Option<&SnrEstimate> {
        match self {
            Outcome::Done(e) => Some(e),
            _ => None,
        }
    }

    fn from_result(r: Result<SnrEstimate>) -> Self {
        match r {
            Ok(e) => Outcome::Done(e),
            Err(e) => Outcome::Failed(e),
        }
    }
}

/// Run every requested estimator; per-method failures never abort the suite.
pub fn estimate_methods(
    img: &Raster,
    second: Option<&Raster>,
    cfg: &EstimatorConfig,
    methods: &[Method],
) -> BTreeMap<Method, Outcome> {
    let mut out = BTreeMap::new();
    if let Err(e) = cfg.validate() {
        let msg = e.to_string();
        for &m in methods {
            out.insert(m, Outcome::Failed(Error::Domain(msg.clone())));
        }
        return out;
    }
    let inputs = if methods.iter().any(|m| Method::SINGLE_IMAGE.contains(m)) {
        Some(AcfInputs::compute(img, cfg.max_lag(), cfg.axis))
    } else {
        None
    };
    for &m in methods {
        let single = || match inputs.as_ref().expect("computed above") {
            Ok(inp) => Ok(inp),
            Err(e) => Err(Error::Domain(e.to_string())),
        };
        let outcome = match m {
            Method::Nn => Outcome::from_result(single().and_then(single::nn)),
            Method::Fol => Outcome::from_result(single().and_then(single::fol)),
            Method::Lsr => Outcome::from_result(single().and_then(|i| single::lsr(i, cfg))),
            Method::Nllsr => Outcome::from_result(single().and_then(|i| single::nllsr(i, cfg))),
            Method::Asnn => Outcome::from_result(single().and_then(|i| single::asnn(i, cfg))),
            Method::Acldr => Outcome::from_result(single().and_then(|i| single::acldr(i, cfg))),
            Method::Chillsr => Outcome::from_result(single().and_then(|i| single::chillsr(i, cfg))),
            Method::FrankAlali => match second {
                Some(b) => Outcome::from_result(estimate_frank_alali(img, b)),
                None => Outcome::NotApplicable,
            },
            Method::Smart => Outcome::from_result(estimate_smart(img, cfg.smart_shift)),
        };
        out.insert(m, outcome);
    }
    out
}

pub fn estimate_all(
    img: &Raster,
    cfg: &EstimatorConfig,
    second: Option<&Raster>,
) -> BTreeMap<Method, Outcome> {
    estimate_methods(img, second, cfg, &Method::ALL)
}
