//! Signal-to-noise estimation for SEM-like grayscale images.
//!
//! The crate covers synthetic acquisitions with a known ground-truth SNR,
//! autocorrelation-based single-image estimators, two-image correlation
//! estimators, hardware-side yield formulas and classical denoising.

pub mod correlation;
pub mod denoise;
pub mod error;
pub mod estimators;
mod fft;
mod linalg;
pub mod raster;
pub mod rng;
pub mod synth;
pub mod yield_snr;

pub use error::{Error, Result};
pub use raster::{ImageStats, Raster};

/// Elementary charge in coulombs (exact SI value).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
