//! Correlation-coefficient estimators: two acquisitions of one scene, or two
//! displaced regions of one image.

use crate::correlation::normalized_ccf;
use crate::error::{domain, Error, Result};
use crate::raster::Raster;

use super::{Method, SnrEstimate};

/// Zero-offset correlation coefficient (standard deviations in the denominator).
pub fn pearson(a: &Raster, b: &Raster) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return domain(format!(
            "dimension mismatch {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        ));
    }
    let (sa, sb) = (a.stats(), b.stats());
    let n = a.len() as f64;
    let cov = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - sa.mean) * (y - sb.mean))
        .sum::<f64>()
        / n;
    let denom = (sa.variance * sb.variance).sqrt();
    if !(denom > 0.0) {
        return Err(Error::NonpositiveCorrelation { rho: f64::NAN });
    }
    Ok((cov / denom).clamp(-1.0, 1.0))
}

fn snr_from_rho(method: Method, rho: f64) -> Result<SnrEstimate> {
    if !(rho > 0.0) {
        return Err(Error::NonpositiveCorrelation { rho });
    }
    let snr = if rho >= 1.0 { f64::INFINITY } else { rho / (1.0 - rho) };
    Ok(SnrEstimate::new(method, snr, None).with("rho", [rho]))
}

pub fn estimate_frank_alali(a: &Raster, b: &Raster) -> Result<SnrEstimate> {
    snr_from_rho(Method::FrankAlali, pearson(a, b)?)
}

/// Largest power-of-two ROI that fits with a horizontal displacement of `shift`.
fn roi_side(w: usize, h: usize, shift: usize) -> usize {
    let limit = w.saturating_sub(shift).min(h);
    if limit == 0 {
        return 0;
    }
    1 << (usize::BITS - 1 - limit.leading_zeros())
}

/// Two regions of one image, the second displaced by `shift` pixels, are
/// compared through their normalized cross-correlation over the overlap. At
/// the recovered displacement both regions hold the same pixels, so the
/// coefficient there is 1 and includes the noise; the neighbours on each side
/// along the shift axis carry signal only, and their linear extrapolation to
/// the peak, `ρ = 2ρ̄(±1) − ρ̄(±2)`, is the signal share of the variance.
pub fn estimate_smart(img: &Raster, shift: usize) -> Result<SnrEstimate> {
    let (w, h) = (img.width(), img.height());
    let n = roi_side(w, h, shift);
    if n < 64 {
        return domain(format!("SMART needs a 64x64 ROI; {w}x{h} with shift {shift} allows {n}"));
    }
    let x0 = ((w - n) / 2).max(shift);
    let y0 = (h - n) / 2;
    let a = img.crop(x0, y0, n, n)?;
    let b = img.crop(x0 - shift, y0, n, n)?;
    let ncc = normalized_ccf(&a, &b, (n / 4).max(shift + 2))?;
    let (at, peak) = ncc.peak();
    let background = ncc.background(at);
    if !(peak > background) {
        return Err(Error::NoPeak { peak, background });
    }
    let k = ncc.max_shift as isize;
    if (at.0.abs() + 2).max(at.1.abs()) > k {
        return Err(Error::NoPeak { peak, background });
    }
    let side = |d: isize| 0.5 * (ncc.get(at.0 + d, at.1) + ncc.get(at.0 - d, at.1));
    let rho = ((2.0 * side(1) - side(2)) / peak).min(1.0);
    Ok(snr_from_rho(Method::Smart, rho)?
        .with("peak_offset", [at.0 as f64, at.1 as f64])
        .with("fwhm", [ncc.fwhm_x(at, background)])
        .with("peak_background", [peak, background])
        .with("roi", [n as f64]))
}
