use fisher_anneal_core::Error as CoreError;

/// Process exit status of the `fa` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitCode {
    Success = 0,
    Config = 2,
    Infeasible = 3,
    Numerical = 4,
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl AppError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        AppError::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Core(e) => match e {
                CoreError::NonFinite { .. }
                | CoreError::QuadratureNotConverged { .. }
                | CoreError::DensityUnderflow { .. }
                | CoreError::EmptyReferenceBin { .. }
                | CoreError::TooFewOccupiedBins { .. }
                | CoreError::InsufficientPoints { .. }
                | CoreError::SingularMetric { .. }
                | CoreError::DivergentIntegrand { .. }
                | CoreError::NonPositiveSchedule { .. } => ExitCode::Numerical,
                _ => ExitCode::Config,
            },
            AppError::Config(_) | AppError::Json(_) | AppError::Csv(_) => ExitCode::Config,
            AppError::Io { .. } | AppError::ThreadPool(_) => ExitCode::Numerical,
        }
    }
}
