use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("derivative order ({alpha}, {beta}) exceeds declared maximum {max}")]
    OrderExceeded { alpha: usize, beta: usize, max: usize },
    #[error("|delta| = {0} exceeds 1")]
    DeltaOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported symbol family: {0}")]
    UnsupportedFamily(String),
    #[error("kernel offset {offset} is not a multiple of the grid spacing {spacing}")]
    OffsetNotOnGrid { offset: f64, spacing: f64 },
    #[error("grid too small: regular kernel is {residual:e} at |v| = 2L")]
    GridTooSmall { residual: f64 },
    #[error("matrix dimension {0} exceeds the dense limit of 4096")]
    MatrixTooLarge(usize),
    #[error("eigensolver failed to converge")]
    EigSolveFailure,
    #[error("Hausdorff distance of an empty set")]
    EmptySet,
    #[error("spectrum reports come from different grids")]
    GridMismatch,
    #[error("partition coverage fails: sum of squared bumps vanishes near z = {0}")]
    CoverageFailure(f64),
    #[error("shift of {shift} nodes exceeds a quarter of the grid ({limit})")]
    ShiftTooLarge { shift: i64, limit: usize },
    #[error("spectral parameter {z} is within {dist:e} of the spectrum")]
    TooCloseToSpectrum { z: f64, dist: f64 },
    #[error("non-positive data in power-law fit")]
    NonPositiveData,
    #[error("power-law fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("column `{0}` not found")]
    ColumnMissing(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by the user's input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidParameter(_)
                | Error::DeltaOutOfRange(_)
                | Error::UnsupportedFamily(_)
                | Error::OffsetNotOnGrid { .. }
                | Error::ColumnMissing(_)
                | Error::MatrixTooLarge(_)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
