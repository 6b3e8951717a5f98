//! Synthetic SEM acquisitions with an exact ground-truth SNR, plus the small
//! analytic noise-power helpers.

use rand::Rng as _;
use rand_distr::{Binomial, Distribution, Gamma, Normal, Poisson};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::raster::Raster;
use crate::rng::{self, Rng};
use crate::ELEMENTARY_CHARGE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmissionModel {
    /// Noise-free: the expected image is emitted as is.
    None,
    /// Primary-electron shot noise only, N_PE ~ Poisson(N̄).
    PoissonPe,
    /// Secondary emission, SE | N_PE ~ Poisson(δ N_PE).
    PoissonSe,
    /// Backscatter, BSE | N_PE ~ Binomial(N_PE, η).
    BinomialBse,
    /// Expected image plus N(0, σ²).
    AdditiveGaussian { sigma: f64 },
    /// Each pixel replaced with probability `fraction` by 0 or full scale.
    Impulse { fraction: f64 },
}

impl EmissionModel {
    pub fn name(&self) -> &'static str {
        match self {
            EmissionModel::None => "none",
            EmissionModel::PoissonPe => "poisson_pe",
            EmissionModel::PoissonSe => "poisson_se",
            EmissionModel::BinomialBse => "binomial_bse",
            EmissionModel::AdditiveGaussian { .. } => "additive_gaussian",
            EmissionModel::Impulse { .. } => "impulse",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, EmissionModel::None)
    }
}

#[derive(Debug, Clone)]
pub struct NoiseRecipe {
    /// Mean primary electrons per pixel.
    pub dose_map: Raster,
    /// SE yield δ.
    pub se_yield: f64,
    /// BSE yield η.
    pub bse_yield: f64,
    pub model: EmissionModel,
    /// Variance inflation k of the SE yield; 1 is pure Poisson.
    pub se_inflation: f64,
    pub detector_gain: f64,
    pub dc_offset: f64,
    pub seed: u64,
    /// Stream index within the seed, used for corpus members.
    pub stream: u64,
    pub bit_depth: u8,
}

impl NoiseRecipe {
    pub fn new(dose_map: Raster, model: EmissionModel, seed: u64) -> Self {
        let bit_depth = dose_map.bit_depth();
        Self {
            dose_map,
            se_yield: 1.0,
            bse_yield: 0.0,
            model,
            se_inflation: 1.0,
            detector_gain: 1.0,
            dc_offset: 0.0,
            seed,
            stream: 0,
            bit_depth,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(v) = self.dose_map.data().iter().find(|&&v| v <= 0.0) {
            return domain(format!("dose map must be positive everywhere, found {v}"));
        }
        if !(self.se_yield > 0.0 && self.se_yield <= 1.0) && self.model == EmissionModel::PoissonSe {
            return domain(format!("se_yield must lie in (0, 1], got {}", self.se_yield));
        }
        if !(0.0..=1.0).contains(&self.bse_yield) {
            return domain(format!("bse_yield must lie in [0, 1], got {}", self.bse_yield));
        }
        if !(1.0..=2.0).contains(&self.se_inflation) {
            return domain(format!("se_inflation must lie in [1, 2], got {}", self.se_inflation));
        }
        if !(self.detector_gain > 0.0 && self.detector_gain.is_finite()) {
            return domain(format!("detector_gain must be positive, got {}", self.detector_gain));
        }
        match self.model {
            EmissionModel::AdditiveGaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                domain(format!("gaussian sigma must be nonnegative, got {sigma}"))
            }
            EmissionModel::Impulse { fraction } if !(0.0..=1.0).contains(&fraction) => {
                domain(format!("impulse fraction must lie in [0, 1], got {fraction}"))
            }
            _ => Ok(()),
        }
    }

    /// Mean emitted count per primary electron for this model.
    fn yield_factor(&self) -> f64 {
        match self.model {
            EmissionModel::PoissonSe => self.se_yield,
            EmissionModel::BinomialBse => self.bse_yield,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Noise-free expected image (real valued, not quantized).
    pub clean: Raster,
    /// Detected, quantized image.
    pub noisy: Raster,
    pub signal_energy: f64,
    pub noise_energy: f64,
    /// `signal_energy / noise_energy`; infinite when the realized noise is zero.
    pub true_snr: f64,
    pub clamped: usize,
}

fn poisson(rng: &mut Rng, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    Poisson::new(lambda).expect("positive finite rate").sample(rng)
}

fn se_count(rng: &mut Rng, mean: f64, k: f64) -> f64 {
    if k <= 1.0 || mean <= 0.0 {
        return poisson(rng, mean);
    }
    // Gamma-Poisson mixture: mean m, variance k m.
    let theta = k - 1.0;
    let rate = Gamma::new(mean / theta, theta).expect("positive gamma parameters").sample(rng);
    poisson(rng, rate)
}

pub fn simulate(recipe: &NoiseRecipe) -> Result<GroundTruth> {
    recipe.validate()?;
    let dose = &recipe.dose_map;
    let g = recipe.detector_gain;
    let dc = recipe.dc_offset;
    let yf = recipe.yield_factor();
    let clean = dose.map(|n| g * yf * n + dc)?.with_depth(recipe.bit_depth)?;
    let maxval = clean.maxval();

    let mut rng = rng::stream(recipe.seed, recipe.stream);
    let mut detected = Vec::with_capacity(dose.len());
    for (&n, &c) in dose.data().iter().zip(clean.data()) {
        let v = match recipe.model {
            EmissionModel::None => c,
            EmissionModel::PoissonPe => g * poisson(&mut rng, n) + dc,
            EmissionModel::PoissonSe => {
                let npe = poisson(&mut rng, n);
                g * se_count(&mut rng, recipe.se_yield * npe, recipe.se_inflation) + dc
            }
            EmissionModel::BinomialBse => {
                let npe = poisson(&mut rng, n) as u64;
                let b = Binomial::new(npe, recipe.bse_yield).expect("probability in [0, 1]");
                g * b.sample(&mut rng) as f64 + dc
            }
            EmissionModel::AdditiveGaussian { sigma } => {
                if sigma > 0.0 {
                    c + Normal::new(0.0, sigma).expect("finite sigma").sample(&mut rng)
                } else {
                    c
                }
            }
            EmissionModel::Impulse { fraction } => {
                if rng.random::<f64>() < fraction {
                    if rng.random::<bool>() { maxval } else { 0.0 }
                } else {
                    c
                }
            }
        };
        detected.push(v);
    }
    let q = clean.with_data(detected)?.quantize(recipe.bit_depth)?;
    let noisy = q.raster;

    let signal_energy = clean.stats().variance;
    let diff = noisy.with_data(noisy.data().iter().zip(clean.data()).map(|(a, b)| a - b).collect())?;
    let noise_energy = diff.stats().variance;
    let true_snr = if noise_energy > 0.0 { signal_energy / noise_energy } else { f64::INFINITY };
    Ok(GroundTruth { clean, noisy, signal_energy, noise_energy, true_snr, clamped: q.clamped })
}

// ---------------------------------------------------------------------------
// Scenes and dose maps
// ---------------------------------------------------------------------------

/// Zero-mean, unit-variance smooth random texture. White noise is passed
/// twice along each axis through the first-order recursion
/// `y[i] = (1 - p) x[i] + p y[i - 1]`, which gives a double-pole
/// autocorrelation that is smooth at the origin for `p` near 1.
pub fn smooth_field(width: usize, height: usize, p: f64, seed: u64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return domain(format!("smoothing pole must lie in [0, 1), got {p}"));
    }
    let pad = ((8.0 / (1.0 - p)).ceil() as usize).clamp(16, 1024);
    let (w, h) = (width + 2 * pad, height + 2 * pad);
    let mut rng = rng::stream(seed, u64::MAX);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut x: Vec<f64> = (0..w * h).map(|_| normal.sample(&mut rng)).collect();
    let a = 1.0 - p;
    for _ in 0..2 {
        for row in x.chunks_exact_mut(w) {
            let mut prev = 0.0;
            for v in row.iter_mut() {
                prev = a * *v + p * prev;
                *v = prev;
            }
        }
    }
    for _ in 0..2 {
        for col in 0..w {
            let mut prev = 0.0;
            for r in 0..h {
                let v = &mut x[r * w + col];
                prev = a * *v + p * prev;
                *v = prev;
            }
        }
    }
    let mut out = Vec::with_capacity(width * height);
    for r in pad..pad + height {
        out.extend_from_slice(&x[r * w + pad..r * w + pad + width]);
    }
    let n = out.len() as f64;
    let mean = out.iter().sum::<f64>() / n;
    let sd = (out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    for v in &mut out {
        *v = (*v - mean) / sd;
    }
    Ok(out)
}

/// Affine map of a unit field onto a dose map with the given mean and spread.
pub fn dose_from_field(
    field: &[f64],
    width: usize,
    height: usize,
    bit_depth: u8,
    mean: f64,
    spread: f64,
) -> Result<Raster> {
    let map = Raster::new(width, height, bit_depth, field.iter().map(|v| mean + spread * v).collect())?;
    if let Some(v) = map.data().iter().find(|&&v| v <= 0.0) {
        return domain(format!("scene contrast drives the dose nonpositive ({v})"));
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// Analytic noise powers
// ---------------------------------------------------------------------------

/// Mean-square shot-noise current, 2 e I Δf.
pub fn shot_noise_power(i_pe: f64, bandwidth: f64) -> Result<f64> {
    if !(i_pe > 0.0 && bandwidth > 0.0) {
        return domain(format!("current and bandwidth must be positive, got {i_pe}, {bandwidth}"));
    }
    Ok(2.0 * ELEMENTARY_CHARGE * i_pe * bandwidth)
}

/// Noise power transmitted through a grid of transmission γ.
pub fn partition_noise_power(gamma: f64, se_noise_power: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return domain(format!("transmission must lie in [0, 1], got {gamma}"));
    }
    if se_noise_power < 0.0 {
        return domain(format!("noise power must be nonnegative, got {se_noise_power}"));
    }
    Ok(gamma * gamma * se_noise_power + gamma * (1.0 - gamma) * se_noise_power)
}

/// Total SE yield δ_SE1 (1 + ζ).
pub fn total_se_yield(delta_se1: f64, zeta: f64) -> Result<f64> {
    if delta_se1 < 0.0 || !(0.0..=1.0).contains(&zeta) {
        return domain(format!("need δ_SE1 >= 0 and ζ in [0, 1], got {delta_se1}, {zeta}"));
    }
    Ok(delta_se1 + zeta * delta_se1)
}
