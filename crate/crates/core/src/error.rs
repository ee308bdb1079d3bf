use thiserror::Error;

/// Errors raised by the estimation and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("column {0} has zero norm")]
    ZeroNormColumn(usize),

    #[error("no admissible column: every candidate is degenerate")]
    AllColumnsDegenerate,

    #[error("insufficient sample: need at least {needed} rows, have {available}")]
    InsufficientSample { needed: usize, available: usize },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("degenerate shock: residual variance of the shock is {0:e}")]
    DegenerateShock(f64),

    #[error("bandwidth {bandwidth} too large for series of length {len}")]
    BandwidthTooLarge { bandwidth: usize, len: usize },

    #[error("coefficients remain non-stationary after damping (spectral radius {0})")]
    NonStationaryAfterDamping(f64),

    #[error("non-stationary specification: {0}")]
    NonStationarySpec(String),

    #[error("treatment is not absorbing for unit `{0}`")]
    NonAbsorbingTreatment(String),

    #[error("no newly treated observations at horizon {0}")]
    NoTreatedUnits(usize),

    #[error("no clean control observations at horizon {0}")]
    NoCleanControls(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
