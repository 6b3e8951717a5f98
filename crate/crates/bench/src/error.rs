use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("internal: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Data(_) => 3,
            BenchError::Internal(_) => 4,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        BenchError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Data(e.to_string())
    }
}

impl From<semsnr_core::Error> for BenchError {
    fn from(e: semsnr_core::Error) -> Self {
        match e {
            semsnr_core::Error::Io(_) | semsnr_core::Error::Parse { .. } | semsnr_core::Error::SizeMismatch { .. } => {
                BenchError::Data(e.to_string())
            }
            _ => BenchError::Internal(e.to_string()),
        }
    }
}
