use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("pgm parse error at token {token:?}: {reason}")]
    Parse { token: String, reason: String },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// Predicted noise-free peak sits at or above the noisy peak.
    #[error("degenerate estimate: noise-free peak {r_nf} >= noisy peak {r0}")]
    Degenerate { r0: f64, r_nf: f64 },

    /// A corrected SNR came out nonpositive.
    #[error("degenerate estimate: corrected snr {snr} is not positive")]
    DegenerateSnr { snr: f64 },

    #[error("nonpositive signal: {0}")]
    NonpositiveSignal(String),

    #[error("nonpositive correlation: rho = {rho}")]
    NonpositiveCorrelation { rho: f64 },

    #[error("no detectable correlation peak (peak {peak} <= background {background})")]
    NoPeak { peak: f64, background: f64 },

    #[error("log-domain error: nonpositive value {value} at lag {lag}")]
    LogDomain { lag: usize, value: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("non-stationary sequence: |reflection| = {reflection} at stage {stage}")]
    NonStationary { stage: usize, reflection: f64 },

    #[error("inconsistent currents: {0}")]
    InconsistentCurrents(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable status tag used in result tables.
    pub fn status(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::Domain(_) => "domain",
            Error::Degenerate { .. } | Error::DegenerateSnr { .. } => "degenerate",
            Error::NonpositiveSignal(_) => "nonpositive_signal",
            Error::NonpositiveCorrelation { .. } => "nonpositive_correlation",
            Error::NoPeak { .. } => "no_peak",
            Error::LogDomain { .. } => "log_domain",
            Error::Singular(_) => "singular",
            Error::NonStationary { .. } => "non_stationary",
            Error::InconsistentCurrents(_) => "inconsistent_currents",
        }
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
