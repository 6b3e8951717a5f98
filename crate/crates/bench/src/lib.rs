//! Corpus generation, estimator and denoising runs, sweeps and reports for
//! the `semsnr` command-line tool.

pub mod config;
pub mod corpus;
pub mod csvio;
pub mod denoise;
pub mod error;
pub mod estimate;
pub mod report;
pub mod svg;
pub mod sweep;

pub use error::{BenchError, Result};
