use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension {0} (only 1 and 2 are supported)")]
    UnsupportedDimension(usize),
    #[error("non-finite state at step {step}, particle {particle}")]
    NonFinite { step: u64, particle: usize },
    #[error("schedule is not positive at t = {t}: value {value}")]
    NonPositiveSchedule { t: f64, value: f64 },
    #[error("time {t} is outside the schedule domain (t >= {start} required)")]
    OutsideScheduleDomain { t: f64, start: f64 },
    #[error("reference density underflows at {} grid point(s), first at {:?}", .points.len(), .points.first())]
    DensityUnderflow { points: Vec<[f64; 2]> },
    #[error("quadrature did not converge (last estimate {estimate})")]
    QuadratureNotConverged { estimate: f64 },
    #[error("reference mass underflows in occupied bin {bin}")]
    EmptyReferenceBin { bin: usize },
    #[error("only {occupied} occupied bins, at least {needed} required")]
    TooFewOccupiedBins { occupied: usize, needed: usize },
    #[error("only {found} usable points in the fit window, at least {needed} required")]
    InsufficientPoints { found: usize, needed: usize },
    #[error("oracle requires quadratic potential")]
    NotQuadratic,
    #[error("oracle does not support this dynamics: {0}")]
    UnsupportedOracle(&'static str),
    #[error("diffusion profile must be diagonal")]
    NonDiagonalAlpha,
    #[error("metric is not positive definite at t = {t}, x = {point:?}")]
    SingularMetric { t: f64, point: [f64; 2] },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("integrand is not finite at r = {at}")]
    DivergentIntegrand { at: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("histogram grids do not match")]
    MismatchedGrids,
}
