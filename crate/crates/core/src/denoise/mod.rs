//! Classical denoising: spatial filters, global and local Wiener filters and
//! the blind AR noise-variance estimate that drives AR-Wiener.
//!
//! Filter specs have a string form `kind[:key=value,...]`, for example
//! `gaussian:sigma=1.5`, `median:window=3`, `bilateral:sigma_s=2,sigma_r=20`,
//! `wiener_global:noise_var=25`, `wiener_local:window=7,noise_var=25` and
//! `ar_wiener:order=2,window=7`. Edges are mirrored without repeating the
//! border sample everywhere.

mod ar;
mod spatial;
mod wiener;

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::raster::Raster;

pub use ar::{estimate_noise_variance_ar, DEFAULT_AR_ORDER};
pub use spatial::{gaussian_kernel, spatial_filter};
pub use wiener::{ar_wiener, wiener_global, wiener_global_transfer, wiener_local, NoisePsd};

#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    /// Separable Gaussian; the kernel spans `2 * radius + 1` taps.
    Gaussian { sigma: f64, radius: usize },
    Median { window: usize },
    /// Spatial window radius is `ceil(3 sigma_s)`.
    Bilateral { sigma_s: f64, sigma_r: f64 },
    WienerGlobal { noise: NoisePsd },
    WienerLocal { window: usize, noise_var: f64 },
    ArWiener { order: usize, window: usize },
}

impl FilterSpec {
    pub fn gaussian(sigma: f64) -> Self {
        Self::Gaussian { sigma, radius: (3.0 * sigma).ceil().max(1.0) as usize }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Median { .. } => "median",
            Self::Bilateral { .. } => "bilateral",
            Self::WienerGlobal { .. } => "wiener_global",
            Self::WienerLocal { .. } => "wiener_local",
            Self::ArWiener { .. } => "ar_wiener",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let odd = |w: usize| {
            if w >= 3 && w % 2 == 1 {
                Ok(())
            } else {
                domain(format!("window must be odd and >= 3, got {w}"))
            }
        };
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                domain(format!("{name} must be positive, got {v}"))
            }
        };
        match self {
            Self::Gaussian { sigma, radius } => {
                pos("sigma", *sigma)?;
                if *radius == 0 {
                    return domain("gaussian radius must be >= 1");
                }
                Ok(())
            }
            Self::Median { window } => odd(*window),
            Self::Bilateral { sigma_s, sigma_r } => {
                pos("sigma_s", *sigma_s)?;
                pos("sigma_r", *sigma_r)
            }
            Self::WienerGlobal { noise } => noise.validate(),
            Self::WienerLocal { window, noise_var } => {
                odd(*window)?;
                if !(*noise_var >= 0.0 && noise_var.is_finite()) {
                    return domain(format!("noise_var must be nonnegative, got {noise_var}"));
                }
                Ok(())
            }
            Self::ArWiener { order, window } => {
                odd(*window)?;
                if *order == 0 {
                    return domain("ar order must be >= 1");
                }
                Ok(())
            }
        }
    }

    /// Side of the square neighbourhood the filter reads, if it has one.
    pub fn footprint(&self) -> Option<usize> {
        match self {
            Self::Gaussian { radius, .. } => Some(2 * radius + 1),
            Self::Median { window } | Self::WienerLocal { window, .. } | Self::ArWiener { window, .. } => {
                Some(*window)
            }
            Self::Bilateral { sigma_s, .. } => Some(2 * bilateral_radius(*sigma_s) + 1),
            Self::WienerGlobal { .. } => None,
        }
    }
}

pub(crate) fn bilateral_radius(sigma_s: f64) -> usize {
    (3.0 * sigma_s).ceil().max(1.0) as usize
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { sigma, radius } => write!(f, "gaussian:sigma={sigma},radius={radius}"),
            Self::Median { window } => write!(f, "median:window={window}"),
            Self::Bilateral { sigma_s, sigma_r } => {
                write!(f, "bilateral:sigma_s={sigma_s},sigma_r={sigma_r}")
            }
            Self::WienerGlobal { noise: NoisePsd::Scalar(v) } => write!(f, "wiener_global:noise_var={v}"),
            Self::WienerGlobal { noise: NoisePsd::PerFrequency(_) } => write!(f, "wiener_global:psd"),
            Self::WienerLocal { window, noise_var } => {
                write!(f, "wiener_local:window={window},noise_var={noise_var}")
            }
            Self::ArWiener { order, window } => write!(f, "ar_wiener:order={order},window={window}"),
        }
    }
}

impl FromStr for FilterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params: Vec<(String, String)> = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Domain(format!("expected key=value in filter spec, got {item:?}")))?;
            params.push((k.trim().to_string(), v.trim().to_string()));
        }
        let allowed: &[&str] = match kind {
            "gaussian" => &["sigma", "radius"],
            "median" => &["window"],
            "bilateral" => &["sigma_s", "sigma_r"],
            "wiener_global" => &["noise_var"],
            "wiener_local" => &["window", "noise_var"],
            "ar_wiener" => &["order", "window"],
            other => return domain(format!("unknown filter kind {other:?}")),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return domain(format!("unknown key {k:?} for filter {kind}"));
        }
        let get = |key: &str| params.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let num = |key: &str| -> Result<Option<f64>> {
            get(key)
                .map(|v| v.parse::<f64>().map_err(|_| Error::Domain(format!("bad number for {key}: {v:?}"))))
                .transpose()
        };
        let int = |key: &str| -> Result<Option<usize>> {
            get(key)
                .map(|v| v.parse::<usize>().map_err(|_| Error::Domain(format!("bad integer for {key}: {v:?}"))))
                .transpose()
        };
        let need = |key: &str, v: Option<f64>| v.ok_or_else(|| Error::Domain(format!("{kind} needs {key}")));
        let spec = match kind {
            "gaussian" => {
                let sigma = need("sigma", num("sigma")?)?;
                match int("radius")? {
                    Some(radius) => Self::Gaussian { sigma, radius },
                    None => Self::gaussian(sigma),
                }
            }
            "median" => Self::Median { window: int("window")?.unwrap_or(3) },
            "bilateral" => Self::Bilateral {
                sigma_s: need("sigma_s", num("sigma_s")?)?,
                sigma_r: need("sigma_r", num("sigma_r")?)?,
            },
            "wiener_global" => {
                Self::WienerGlobal { noise: NoisePsd::Scalar(need("noise_var", num("noise_var")?)?) }
            }
            "wiener_local" => Self::WienerLocal {
                window: int("window")?.unwrap_or(5),
                noise_var: need("noise_var", num("noise_var")?)?,
            },
            _ => Self::ArWiener {
                order: int("order")?.unwrap_or(DEFAULT_AR_ORDER),
                window: int("window")?.unwrap_or(5),
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseReport {
    pub output: Raster,
    /// Against the reference image, when one was supplied.
    pub mse_vs_reference: Option<f64>,
    pub psnr_db: Option<f64>,
    /// Set on the AR-Wiener path.
    pub estimated_noise_variance: Option<f64>,
}

impl DenoiseReport {
    pub(crate) fn new(output: Raster, reference: Option<&Raster>) -> Result<Self> {
        let mse = reference.map(|r| output.mse(r)).transpose()?;
        let psnr_db = mse.map(|m| psnr(m, output.maxval()));
        Ok(Self { output, mse_vs_reference: mse, psnr_db, estimated_noise_variance: None })
    }
}

/// `20 log10(maxval) - 10 log10(mse)`; infinite for a perfect match.
pub fn psnr(mse: f64, maxval: f64) -> f64 {
    if mse <= 0.0 {
        f64::INFINITY
    } else {
        20.0 * maxval.log10() - 10.0 * mse.log10()
    }
}

/// Run any filter spec, scoring against `reference` when given.
pub fn denoise(img: &Raster, spec: &FilterSpec, reference: Option<&Raster>) -> Result<DenoiseReport> {
    spec.validate()?;
    match spec {
        FilterSpec::WienerGlobal { noise } => wiener_global(img, noise, reference),
        FilterSpec::WienerLocal { window, noise_var } => wiener_local(img, *window, *noise_var, reference),
        FilterSpec::ArWiener { .. } => ar_wiener(img, spec, reference),
        _ => DenoiseReport::new(spatial_filter(img, spec)?, reference),
    }
}

/// Mirror an index into `0..n` without repeating the edge sample (…2 1 0 1 2…).
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - j;
    }
    j as usize
}

pub(crate) fn check_footprint(img: &Raster, side: usize) -> Result<()> {
    if side > img.width() || side > img.height() {
        return domain(format!(
            "filter window {side} larger than image {}x{}",
            img.width(),
            img.height()
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-3..8).map(|i| reflect(i, 5)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
    }

    #[test]
    fn spec_round_trip() {
        for s in [
            "gaussian:sigma=1.5,radius=5",
            "median:window=5",
            "bilateral:sigma_s=2,sigma_r=20",
            "wiener_global:noise_var=25",
            "wiener_local:window=7,noise_var=25",
            "ar_wiener:order=2,window=7",
        ] {
            let spec: FilterSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.to_string().parse::<FilterSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn spec_defaults_and_errors() {
        assert_eq!("gaussian:sigma=1".parse::<FilterSpec>().unwrap(), FilterSpec::Gaussian { sigma: 1.0, radius: 3 });
        assert_eq!("median".parse::<FilterSpec>().unwrap(), FilterSpec::Median { window: 3 });
        assert!("median:window=4".parse::<FilterSpec>().is_err());
        assert!("median:window=1".parse::<FilterSpec>().is_err());
        assert!("gaussian:sigma=0".parse::<FilterSpec>().is_err());
        assert!("gaussian".parse::<FilterSpec>().is_err());
        assert!("wiener_local:window=7,noise_var=-1".parse::<FilterSpec>().is_err());
        assert!("wiener_local:window=7,noise=1".parse::<FilterSpec>().is_err());
        assert!("kalman:gain=1".parse::<FilterSpec>().is_err());
        assert!("ar_wiener:order=0".parse::<FilterSpec>().is_err());
    }

    #[test]
    fn psnr_matches_mse() {
        assert!((psnr(1.0, 255.0) - 48.130_803_608_679_1).abs() < 1e-9);
        assert!(psnr(0.0, 255.0).is_infinite());
    }
}
