//! Frequency-domain Wiener filter with spectral subtraction, the local
//! (adaptive) MMSE Wiener filter, and AR-Wiener.

use rustfft::num_complex::Complex64;

use crate::error::{domain, Result};
use crate::fft::{fft2, to_complex};
use crate::raster::Raster;

use super::ar::estimate_noise_variance_ar;
use super::{check_footprint, reflect, DenoiseReport, FilterSpec};

/// Noise power spectrum P_u, in the periodogram normalization |X(ω)|²/N
/// (so white noise of variance σ² has P_u ≡ σ²).
#[derive(Debug, Clone, PartialEq)]
pub enum NoisePsd {
    Scalar(f64),
    /// Row-major, same layout as the image's 2-D DFT.
    PerFrequency(Vec<f64>),
}

impl NoisePsd {
    pub fn validate(&self) -> Result<()> {
        let bad = match self {
            Self::Scalar(v) => (!(*v >= 0.0 && v.is_finite())).then_some(*v),
            Self::PerFrequency(p) => p.iter().copied().find(|v| !(*v >= 0.0 && v.is_finite())),
        };
        match bad {
            Some(v) => domain(format!("noise power must be nonnegative and finite, got {v}")),
            None => Ok(()),
        }
    }

    fn at(&self, i: usize) -> f64 {
        match self {
            Self::Scalar(v) => *v,
            Self::PerFrequency(p) => p[i],
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Self::Scalar(v) => *v == 0.0,
            Self::PerFrequency(p) => p.iter().all(|&v| v == 0.0),
        }
    }
}

fn spectrum_and_transfer(img: &Raster, noise: &NoisePsd) -> Result<(Vec<Complex64>, Vec<f64>)> {
    noise.validate()?;
    let n = img.len();
    if let NoisePsd::PerFrequency(p) = noise {
        if p.len() != n {
            return domain(format!("noise psd has {} entries, image has {n} frequencies", p.len()));
        }
    }
    let mut spec = to_complex(img.data());
    fft2(&mut spec, img.width(), img.height(), false);
    let transfer = spec
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i == 0 {
                return 1.0;
            }
            let pu = noise.at(i);
            let pf = (c.norm_sqr() / n as f64 - pu).max(0.0);
            if pf + pu == 0.0 {
                1.0
            } else {
                pf / (pf + pu)
            }
        })
        .collect();
    Ok((spec, transfer))
}

/// Realized H(ω) = P_f / (P_f + P_u) with P_f = max(P_w − P_u, 0); H(0) = 1.
pub fn wiener_global_transfer(img: &Raster, noise: &NoisePsd) -> Result<Vec<f64>> {
    Ok(spectrum_and_transfer(img, noise)?.1)
}

pub fn wiener_global(img: &Raster, noise: &NoisePsd, reference: Option<&Raster>) -> Result<DenoiseReport> {
    let (mut spec, transfer) = spectrum_and_transfer(img, noise)?;
    if noise.is_zero() {
        return DenoiseReport::new(img.clone(), reference);
    }
    for (c, h) in spec.iter_mut().zip(&transfer) {
        *c *= h;
    }
    fft2(&mut spec, img.width(), img.height(), true);
    let out = img.with_data(spec.iter().map(|c| c.re).collect())?;
    DenoiseReport::new(out, reference)
}

/// Local MMSE: `m + max(v − σ², 0) / max(v, σ²) · (x − m)` with the window
/// mean `m` and variance `v`.
pub fn wiener_local(
    img: &Raster,
    window: usize,
    noise_var: f64,
    reference: Option<&Raster>,
) -> Result<DenoiseReport> {
    FilterSpec::WienerLocal { window, noise_var }.validate()?;
    check_footprint(img, window)?;
    if noise_var == 0.0 {
        return DenoiseReport::new(img.clone(), reference);
    }
    let (w, h) = (img.width(), img.height());
    let r = (window / 2) as isize;
    let count = (window * window) as f64;
    let mut buf = Vec::with_capacity(window * window);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            buf.clear();
            for dy in -r..=r {
                let yy = reflect(y as isize + dy, h);
                for dx in -r..=r {
                    buf.push(img.get(reflect(x as isize + dx, w), yy));
                }
            }
            let m = buf.iter().sum::<f64>() / count;
            let v = buf.iter().map(|b| (b - m) * (b - m)).sum::<f64>() / count;
            let gain = (v - noise_var).max(0.0) / v.max(noise_var);
            out[y * w + x] = m + gain * (img.get(x, y) - m);
        }
    }
    DenoiseReport::new(img.with_data(out)?, reference)
}

/// Blind local Wiener: the noise variance comes from the AR estimate.
pub fn ar_wiener(img: &Raster, spec: &FilterSpec, reference: Option<&Raster>) -> Result<DenoiseReport> {
    let FilterSpec::ArWiener { order, window } = *spec else {
        return domain(format!("ar_wiener needs an ar_wiener spec, got {}", spec.kind()));
    };
    spec.validate()?;
    let var = estimate_noise_variance_ar(img, order)?;
    let mut rep = wiener_local(img, window, var, reference)?;
    rep.estimated_noise_variance = Some(var);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoise::psnr;
    use crate::synth::{dose_from_field, simulate, smooth_field, EmissionModel, NoiseRecipe};

    fn noisy(side: usize, snr: f64, seed: u64) -> (Raster, Raster, f64) {
        let f = smooth_field(side, side, 0.95, seed).unwrap();
        let dose = dose_from_field(&f, side, side, 8, 128.0, 25.0).unwrap();
        let var = dose.stats().variance / snr;
        let r = NoiseRecipe::new(dose, EmissionModel::AdditiveGaussian { sigma: var.sqrt() }, seed);
        let g = simulate(&r).unwrap();
        (g.noisy, g.clean, var)
    }

    #[test]
    fn transfer_in_unit_interval() {
        let (img, _, var) = noisy(64, 2.0, 1);
        for pu in [0.0, var, 1e9] {
            let h = wiener_global_transfer(&img, &NoisePsd::Scalar(pu)).unwrap();
            assert!(h.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(h[0], 1.0);
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let (img, _, _) = noisy(64, 2.0, 2);
        let h = wiener_global_transfer(&img, &NoisePsd::Scalar(0.0)).unwrap();
        assert!(h.iter().all(|&v| v == 1.0));
        assert_eq!(wiener_global(&img, &NoisePsd::Scalar(0.0), None).unwrap().output, img);
        assert_eq!(wiener_local(&img, 7, 0.0, None).unwrap().output, img);
    }

    #[test]
    fn huge_noise_gives_mean_image() {
        let (img, _, _) = noisy(64, 2.0, 3);
        let mean = img.stats().mean;
        let out = wiener_global(&img, &NoisePsd::Scalar(1e12), None).unwrap().output;
        assert!(out.data().iter().all(|v| (v - mean).abs() < 1e-9));
    }

    #[test]
    fn global_preserves_mean() {
        let (img, _, var) = noisy(64, 1.0, 4);
        let out = wiener_global(&img, &NoisePsd::Scalar(var), None).unwrap().output;
        assert!((out.stats().mean - img.stats().mean).abs() < 1e-9);
    }

    #[test]
    fn per_frequency_psd_matches_scalar() {
        let (img, _, var) = noisy(32, 2.0, 5);
        let a = wiener_global(&img, &NoisePsd::Scalar(var), None).unwrap();
        let b = wiener_global(&img, &NoisePsd::PerFrequency(vec![var; img.len()]), None).unwrap();
        assert_eq!(a.output, b.output);
        assert!(wiener_global(&img, &NoisePsd::PerFrequency(vec![var; 3]), None).is_err());
        assert!(wiener_global(&img, &NoisePsd::Scalar(-1.0), None).is_err());
    }

    #[test]
    fn oracle_mse_reduced() {
        for seed in 0..3 {
            let (img, clean, var) = noisy(128, 5.0, seed);
            let before = img.mse(&clean).unwrap();
            let g = wiener_global(&img, &NoisePsd::Scalar(var), Some(&clean)).unwrap();
            let l = wiener_local(&img, 7, var, Some(&clean)).unwrap();
            assert!(g.mse_vs_reference.unwrap() < before);
            assert!(l.mse_vs_reference.unwrap() < before);
        }
    }

    #[test]
    fn flat_region_gives_local_mean() {
        let img = Raster::from_fn(16, 16, 8, |x, y| 100.0 + ((x * 7 + y * 3) % 4) as f64).unwrap();
        let out = wiener_local(&img, 3, 10.0, None).unwrap().output;
        let m = (4..7).flat_map(|y| (4..7).map(move |x| (x, y))).map(|(x, y)| img.get(x, y)).sum::<f64>() / 9.0;
        assert!((out.get(5, 5) - m).abs() < 1e-12);
    }

    #[test]
    fn local_shift_equivariant() {
        let (img, _, var) = noisy(48, 2.0, 6);
        let a = wiener_local(&img, 5, var, None).unwrap().output;
        let b = wiener_local(&img.map(|v| v + 1000.0).unwrap(), 5, var, None).unwrap().output;
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x + 1000.0 - y).abs() < 1e-9);
        }
    }

    #[test]
    fn report_psnr_consistent() {
        let (img, clean, var) = noisy(64, 2.0, 7);
        let rep = wiener_local(&img, 5, var, Some(&clean)).unwrap();
        let m = rep.mse_vs_reference.unwrap();
        assert!((rep.psnr_db.unwrap() - psnr(m, 255.0)).abs() < 1e-9);
    }

    #[test]
    fn ar_wiener_records_estimate() {
        let (img, _, _) = noisy(128, 2.0, 8);
        let spec = FilterSpec::ArWiener { order: 2, window: 5 };
        let rep = ar_wiener(&img, &spec, None).unwrap();
        let v = estimate_noise_variance_ar(&img, 2).unwrap();
        assert_eq!(rep.estimated_noise_variance, Some(v));
        assert_eq!(rep.output, wiener_local(&img, 5, v, None).unwrap().output);
    }
}
