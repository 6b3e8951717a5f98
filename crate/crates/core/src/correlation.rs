//! Auto- and cross-correlation: ACF profiles and surfaces, the zero-offset
//! SNR identity, and CCF peak geometry.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::fft::{fft2, to_complex, zero_padded};
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    /// Mean over all offsets whose rounded radius equals the lag.
    Radial,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Radial => "radial",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "radial" => Ok(Axis::Radial),
            _ => domain(format!("unknown axis {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Sum over the overlapping region only, normalized per lag by its size.
    Valid,
    /// Circular wraparound, normalized by the pixel count.
    Periodic,
}

/// One-dimensional ACF profile r(k), k = 0..=K.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfCurve {
    pub values: Vec<f64>,
    /// Mean of the full image.
    pub mean: f64,
    pub axis: Axis,
}

impl AcfCurve {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn r(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn r0(&self) -> f64 {
        self.values[0]
    }

    pub fn mean_sq(&self) -> f64 {
        self.mean * self.mean
    }

    /// Two-column CSV with a header comment carrying μ and the axis.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# semsnr-csv v1")?;
        writeln!(w, "# mean={} axis={}", self.mean, self.axis)?;
        writeln!(w, "lag,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{k},{v}")?;
        }
        Ok(())
    }
}

/// Valid-overlap ACF at a single 2-D offset.
pub fn acf_at(img: &Raster, dx: isize, dy: isize) -> f64 {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let d = img.data();
    let (x0, x1) = (0.max(-dx), w.min(w - dx));
    let (y0, y1) = (0.max(-dy), h.min(h - dy));
    let mut s = 0.0;
    for y in y0..y1 {
        let row = &d[(y * w) as usize..];
        let row2 = &d[((y + dy) * w) as usize..];
        for x in x0..x1 {
            s += row[x as usize] * row2[(x + dx) as usize];
        }
    }
    s / ((x1 - x0) * (y1 - y0)) as f64
}

/// Circular ACF at a single 2-D offset.
pub fn acf_at_periodic(img: &Raster, dx: isize, dy: isize) -> f64 {
    let (w, h) = (img.width(), img.height());
    let d = img.data();
    let mut s = 0.0;
    for y in 0..h {
        let y2 = (y as isize + dy).rem_euclid(h as isize) as usize;
        for x in 0..w {
            let x2 = (x as isize + dx).rem_euclid(w as isize) as usize;
            s += d[y * w + x] * d[y2 * w + x2];
        }
    }
    s / (w * h) as f64
}

fn check_lag(img: &Raster, max_lag: usize) -> Result<()> {
    if 2 * max_lag >= img.width().min(img.height()) {
        return domain(format!(
            "max_lag {max_lag} must be below half of the smaller image side ({}x{})",
            img.width(),
            img.height()
        ));
    }
    Ok(())
}

/// ACF surface over offsets `-K..=K` on both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfSurface {
    pub max_lag: usize,
    pub values: Vec<f64>,
    pub mean: f64,
}

impl AcfSurface {
    pub fn get(&self, dx: isize, dy: isize) -> f64 {
        let k = self.max_lag as isize;
        let side = 2 * k + 1;
        self.values[((dy + k) * side + dx + k) as usize]
    }
}

/// ACF over all 2-D offsets up to `max_lag`, computed in the spectral domain.
pub fn acf_surface(img: &Raster, max_lag: usize, boundary: Boundary) -> Result<AcfSurface> {
    check_lag(img, max_lag)?;
    let (w, h) = (img.width(), img.height());
    let (pw, ph) = match boundary {
        Boundary::Valid => (w + max_lag, h + max_lag),
        Boundary::Periodic => (w, h),
    };
    let mut buf = match boundary {
        Boundary::Valid => zero_padded(img.data(), w, h, pw, ph),
        Boundary::Periodic => to_complex(img.data()),
    };
    fft2(&mut buf, pw, ph, false);
    for v in buf.iter_mut() {
        *v = rustfft::num_complex::Complex64::new(v.norm_sqr(), 0.0);
    }
    fft2(&mut buf, pw, ph, true);
    let k = max_lag as isize;
    let side = 2 * max_lag + 1;
    let mut values = Vec::with_capacity(side * side);
    for dy in -k..=k {
        for dx in -k..=k {
            let ix = dx.rem_euclid(pw as isize) as usize;
            let iy = dy.rem_euclid(ph as isize) as usize;
            let n = match boundary {
                Boundary::Valid => (w - dx.unsigned_abs()) * (h - dy.unsigned_abs()),
                Boundary::Periodic => w * h,
            };
            values.push(buf[iy * pw + ix].re / n as f64);
        }
    }
    Ok(AcfSurface { max_lag, values, mean: img.stats().mean })
}

/// ACF profile r(k), k = 0..=max_lag, along `axis`.
pub fn autocorrelation(img: &Raster, max_lag: usize, axis: Axis) -> Result<AcfCurve> {
    autocorrelation_with(img, max_lag, axis, Boundary::Valid)
}

pub fn autocorrelation_with(
    img: &Raster,
    max_lag: usize,
    axis: Axis,
    boundary: Boundary,
) -> Result<AcfCurve> {
    check_lag(img, max_lag)?;
    let at = |dx: isize, dy: isize| match boundary {
        Boundary::Valid => acf_at(img, dx, dy),
        Boundary::Periodic => acf_at_periodic(img, dx, dy),
    };
    let values = match axis {
        Axis::X => (0..=max_lag as isize).map(|k| at(k, 0)).collect(),
        Axis::Y => (0..=max_lag as isize).map(|k| at(0, k)).collect(),
        Axis::Radial => {
            let s = acf_surface(img, max_lag, boundary)?;
            let k = max_lag as isize;
            let mut sum = vec![0.0; max_lag + 1];
            let mut cnt = vec![0usize; max_lag + 1];
            for dy in -k..=k {
                for dx in -k..=k {
                    let r = ((dx * dx + dy * dy) as f64).sqrt().round() as usize;
                    if r <= max_lag {
                        sum[r] += s.get(dx, dy);
                        cnt[r] += 1;
                    }
                }
            }
            let mut v: Vec<f64> = sum.iter().zip(&cnt).map(|(s, &c)| s / c as f64).collect();
            // Zero lag directly, so the variance identity holds to rounding.
            v[0] = at(0, 0);
            v
        }
    };
    Ok(AcfCurve { values, mean: img.stats().mean, axis })
}

/// SNR from the noisy zero-lag value, the predicted noise-free value and the mean.
pub fn snr_from_peaks(r0: f64, r_nf: f64, mu: f64) -> Result<f64> {
    if !(r0.is_finite() && r_nf.is_finite()) {
        return Err(Error::Degenerate { r0, r_nf });
    }
    if r_nf >= r0 {
        return Err(Error::Degenerate { r0, r_nf });
    }
    let mu2 = mu * mu;
    if r0 <= mu2 {
        // Zero-variance image: neither signal nor noise.
        return Err(Error::Degenerate { r0, r_nf });
    }
    if r_nf <= mu2 {
        return Err(Error::NonpositiveSignal(format!(
            "noise-free peak {r_nf} is not above mean squared {mu2}"
        )));
    }
    Ok((r_nf - mu2) / (r0 - r_nf))
}

/// Decibels of a power ratio.
pub fn db(snr: f64) -> f64 {
    10.0 * snr.log10()
}

// ---------------------------------------------------------------------------
// Cross-correlation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcfResult {
    /// Offset `s` such that `b(x) ≈ a(x - s)`.
    pub peak_offset: (isize, isize),
    pub peak_value: f64,
    pub background: f64,
    pub fwhm: f64,
    pub rho: f64,
    #[serde(skip)]
    pub width: usize,
    #[serde(skip)]
    pub height: usize,
    /// Circular CCF, c(s) = mean over x of a(x) b(x + s).
    #[serde(skip)]
    pub surface: Vec<f64>,
}

impl CcfResult {
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let x = dx.rem_euclid(self.width as isize) as usize;
        let y = dy.rem_euclid(self.height as isize) as usize;
        self.surface[y * self.width + x]
    }

    pub fn peak_to_background(&self) -> f64 {
        self.peak_value / self.background
    }
}

pub(crate) fn ccf_surface(a: &Raster, b: &Raster) -> Vec<f64> {
    let (w, h) = (a.width(), a.height());
    let mut fa = to_complex(a.data());
    let mut fb = to_complex(b.data());
    fft2(&mut fa, w, h, false);
    fft2(&mut fb, w, h, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = x.conj() * y;
    }
    fft2(&mut fa, w, h, true);
    let n = (w * h) as f64;
    fa.iter().map(|c| c.re / n).collect()
}

fn signed(i: usize, n: usize) -> isize {
    if i > n / 2 { i as isize - n as isize } else { i as isize }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

/// Width at half height above `background` on one side of a peak, given the
/// samples at distance 1, 2, ... from it; linear interpolation between samples.
fn half_width(peak: f64, background: f64, side: impl Iterator<Item = f64>) -> f64 {
    let half = background + 0.5 * (peak - background);
    let mut prev = peak;
    let mut steps = 0;
    for (i, v) in side.enumerate() {
        if v <= half {
            return i as f64 + (prev - half) / (prev - v);
        }
        prev = v;
        steps = i + 1;
    }
    steps as f64
}

/// Full width at half height above `background` of a circular profile peaked at index 0.
fn fwhm_circular(profile: &[f64], background: f64) -> f64 {
    let n = profile.len();
    let peak = profile[0];
    let right = half_width(peak, background, (1..=n / 2).map(|i| profile[i % n]));
    let left = half_width(peak, background, (1..=n / 2).map(|i| profile[(n - i) % n]));
    (left + right).max(1.0)
}

pub fn cross_correlate(a: &Raster, b: &Raster) -> Result<CcfResult> {
    if a.width() != b.width() || a.height() != b.height() {
        return domain(format!(
            "dimension mismatch {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        ));
    }
    let (w, h) = (a.width(), a.height());
    if w < 16 || h < 16 {
        return domain(format!("cross-correlation needs at least 16x16, got {w}x{h}"));
    }
    Ok(CcfResult::from_surface(a, b, ccf_surface(a, b)))
}

impl CcfResult {
    /// Peak geometry and correlation from a precomputed circular CCF surface.
    pub(crate) fn from_surface(a: &Raster, b: &Raster, surface: Vec<f64>) -> Self {
        let (w, h) = (a.width(), a.height());
        let imax = surface
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if *v > surface[best] { i } else { best });
        let (px, py) = (imax % w, imax / w);
        let peak_value = surface[imax];

        let mut rest = Vec::with_capacity(surface.len());
        for y in 0..h {
            for x in 0..w {
                let ddx = signed((x + w - px) % w, w).abs();
                let ddy = signed((y + h - py) % h, h).abs();
                if ddx > 2 || ddy > 2 {
                    rest.push(surface[y * w + x]);
                }
            }
        }
        let background = median(rest);
        let profile: Vec<f64> = (0..w).map(|i| surface[py * w + (px + i) % w]).collect();
        let fwhm = fwhm_circular(&profile, background);

        let sa = a.stats();
        let sb = b.stats();
        let denom = (sa.variance * sb.variance).sqrt();
        let rho = if denom > 0.0 {
            ((peak_value - sa.mean * sb.mean) / denom).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        CcfResult {
            peak_offset: (signed(px, w), signed(py, h)),
            peak_value,
            background,
            fwhm,
            rho,
            width: w,
            height: h,
            surface,
        }
    }
}

// ---------------------------------------------------------------------------
// Normalized cross-correlation over the overlap
// ---------------------------------------------------------------------------

/// Correlation coefficient between `a` and `b` displaced by each shift
/// `(dx, dy)` with `|dx|, |dy| <= max_shift`, computed over the overlap only:
/// `a(x)` is paired with `b(x + s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NccSurface {
    pub max_shift: usize,
    pub values: Vec<f64>,
}

impl NccSurface {
    pub fn get(&self, dx: isize, dy: isize) -> f64 {
        let k = self.max_shift as isize;
        self.values[((dy + k) * (2 * k + 1) + dx + k) as usize]
    }

    pub fn peak(&self) -> ((isize, isize), f64) {
        let k = self.max_shift as isize;
        let mut best = ((0, 0), f64::NEG_INFINITY);
        for dy in -k..=k {
            for dx in -k..=k {
                let v = self.get(dx, dy);
                if v > best.1 {
                    best = ((dx, dy), v);
                }
            }
        }
        best
    }

    /// Median over the surface outside the 5x5 neighbourhood of `at`.
    pub fn background(&self, at: (isize, isize)) -> f64 {
        let k = self.max_shift as isize;
        let mut rest = Vec::with_capacity(self.values.len());
        for dy in -k..=k {
            for dx in -k..=k {
                if (dx - at.0).abs() > 2 || (dy - at.1).abs() > 2 {
                    rest.push(self.get(dx, dy));
                }
            }
        }
        median(rest)
    }

    /// Full width at half height of the x line profile through `at`.
    pub fn fwhm_x(&self, at: (isize, isize), background: f64) -> f64 {
        let k = self.max_shift as isize;
        let peak = self.get(at.0, at.1);
        let right = half_width(peak, background, (at.0 + 1..=k).map(|x| self.get(x, at.1)));
        let left = half_width(peak, background, (-k..at.0).rev().map(|x| self.get(x, at.1)));
        (left + right).max(1.0)
    }
}

/// Summed-area table with a zero first row and column.
fn integral(data: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut t = vec![0.0; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += data[y * w + x];
            t[(y + 1) * (w + 1) + x + 1] = t[y * (w + 1) + x + 1] + row;
        }
    }
    t
}

fn box_sum(t: &[f64], w: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
    let s = w + 1;
    t[y1 * s + x1] - t[y0 * s + x1] - t[y1 * s + x0] + t[y0 * s + x0]
}

pub fn normalized_ccf(a: &Raster, b: &Raster, max_shift: usize) -> Result<NccSurface> {
    if a.width() != b.width() || a.height() != b.height() {
        return domain("dimension mismatch");
    }
    check_lag(a, max_shift)?;
    let (w, h) = (a.width(), a.height());
    let (ma, mb) = (a.stats().mean, b.stats().mean);
    let da: Vec<f64> = a.data().iter().map(|v| v - ma).collect();
    let db: Vec<f64> = b.data().iter().map(|v| v - mb).collect();
    let (pw, ph) = (w + max_shift, h + max_shift);
    let mut fa = zero_padded(&da, w, h, pw, ph);
    let mut fb = zero_padded(&db, w, h, pw, ph);
    fft2(&mut fa, pw, ph, false);
    fft2(&mut fb, pw, ph, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = x.conj() * y;
    }
    fft2(&mut fa, pw, ph, true);

    let sq = |d: &[f64]| d.iter().map(|v| v * v).collect::<Vec<_>>();
    let (ia, ia2) = (integral(&da, w, h), integral(&sq(&da), w, h));
    let (ib, ib2) = (integral(&db, w, h), integral(&sq(&db), w, h));
    let k = max_shift as isize;
    let mut values = Vec::with_capacity((2 * max_shift + 1).pow(2));
    for dy in -k..=k {
        for dx in -k..=k {
            let (ax0, ax1) = (0.max(-dx) as usize, (w as isize).min(w as isize - dx) as usize);
            let (ay0, ay1) = (0.max(-dy) as usize, (h as isize).min(h as isize - dy) as usize);
            let (bx0, bx1) = ((ax0 as isize + dx) as usize, (ax1 as isize + dx) as usize);
            let (by0, by1) = ((ay0 as isize + dy) as usize, (ay1 as isize + dy) as usize);
            let n = ((ax1 - ax0) * (ay1 - ay0)) as f64;
            let sab = fa[dy.rem_euclid(ph as isize) as usize * pw + dx.rem_euclid(pw as isize) as usize].re;
            let sa = box_sum(&ia, w, ax0, ay0, ax1, ay1);
            let sa2 = box_sum(&ia2, w, ax0, ay0, ax1, ay1);
            let sb = box_sum(&ib, w, bx0, by0, bx1, by1);
            let sb2 = box_sum(&ib2, w, bx0, by0, bx1, by1);
            let cov = sab - sa * sb / n;
            let den = ((sa2 - sa * sa / n) * (sb2 - sb * sb / n)).sqrt();
            values.push(if den > 0.0 { (cov / den).clamp(-1.0, 1.0) } else { 0.0 });
        }
    }
    Ok(NccSurface { max_shift, values })
}
