use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: phase has m={phase}, grid has m={grid}")]
    DimensionMismatch { phase: usize, grid: usize },

    #[error("exponent p={0} outside [1, 2]")]
    ExponentOutOfRange(f64),

    #[error("unknown phase family `{0}`")]
    UnknownPhase(String),

    #[error("invalid phase parameters: {0}")]
    InvalidPhaseParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scale {scale} is below the resolvable spacing {spacing} (need spacing <= scale/8)")]
    ScaleBelowResolution { scale: f64, spacing: f64 },

    #[error("value {0} is outside the range of chi on the tabulated domain")]
    OutsideChiRange(f64),

    #[error("grid policy exhausted at n={n} for lambda={lambda}: {reason}")]
    Unresolvable { lambda: f64, n: usize, reason: String },

    #[error("smoothness budget below the critical line: tau={tau} (need 0 < tau < 1)")]
    BelowCriticalLine { tau: f64 },

    #[error("frequency {0:?} lies outside the resolved box")]
    OutsideBox(Vec<i64>),

    #[error("degenerate gradient: the gradient range has measure zero, the nondegeneracy hypothesis fails")]
    DegenerateGradient,

    #[error("need at least {needed} rows after discarding, got {got}")]
    InsufficientRows { needed: usize, got: usize },

    #[error("kmax={kmax} too small for lambda={lambda} (need kmax >= lambda + 40)")]
    KmaxTooSmall { kmax: usize, lambda: f64 },

    #[error("y={0} outside the domain of the reference scale")]
    OutOfDomain(f64),
}
