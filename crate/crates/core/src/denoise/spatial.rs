//! Gaussian, median and bilateral filters with mirrored edges.

use crate::error::{domain, Result};
use crate::raster::Raster;

use super::{bilateral_radius, check_footprint, reflect, FilterSpec};

/// Normalized 1-D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

pub fn spatial_filter(img: &Raster, spec: &FilterSpec) -> Result<Raster> {
    spec.validate()?;
    if let Some(side) = spec.footprint() {
        check_footprint(img, side)?;
    }
    let data = match *spec {
        FilterSpec::Gaussian { sigma, radius } => gaussian(img, sigma, radius),
        FilterSpec::Median { window } => median(img, window),
        FilterSpec::Bilateral { sigma_s, sigma_r } => bilateral(img, sigma_s, sigma_r),
        _ => return domain(format!("{} is not a spatial filter", spec.kind())),
    };
    img.with_data(data)
}

fn gaussian(img: &Raster, sigma: f64, radius: usize) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let k = gaussian_kernel(sigma, radius);
    let r = radius as isize;
    let src = img.data();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            tmp[y * w + x] =
                k.iter().enumerate().map(|(i, kv)| kv * row[reflect(x as isize + i as isize - r, w)]).sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[reflect(y as isize + i as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

fn median(img: &Raster, window: usize) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let r = (window / 2) as isize;
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
            let mid = buf.len() / 2;
            let (_, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
            out[y * w + x] = *m;
        }
    }
    out
}

fn bilateral(img: &Raster, sigma_s: f64, sigma_r: f64) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let r = bilateral_radius(sigma_s) as isize;
    let side = (2 * r + 1) as usize;
    let mut spatial = Vec::with_capacity(side * side);
    for dy in -r..=r {
        for dx in -r..=r {
            spatial.push((-((dx * dx + dy * dy) as f64) / (2.0 * sigma_s * sigma_s)).exp());
        }
    }
    let inv_2r2 = 1.0 / (2.0 * sigma_r * sigma_r);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let c = img.get(x, y);
            let (mut num, mut den) = (0.0, 0.0);
            let mut i = 0;
            for dy in -r..=r {
                let yy = reflect(y as isize + dy, h);
                for dx in -r..=r {
                    let v = img.get(reflect(x as isize + dx, w), yy);
                    let d = v - c;
                    let wt = spatial[i] * (-d * d * inv_2r2).exp();
                    num += wt * v;
                    den += wt;
                    i += 1;
                }
            }
            out[y * w + x] = num / den;
        }
    }
    out
}
