use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("basis mismatch: {0} vs {1}")]
    BasisMismatch(String, String),
    #[error("operator is not diagonal in its basis")]
    NotDiagonal,
    #[error("period must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("duplicate clock level n = {0}")]
    DuplicateLevel(i64),
    #[error("interval [{a}, {b}] is not inside [0, {t_max}]")]
    IntervalOutOfRange { a: f64, b: f64, t_max: f64 },
    #[error("moment commutator defect is undefined for n = 0")]
    ZerothMomentDefect,
    #[error("product dimension {dim} exceeds guard {guard}")]
    DimensionOverflow { dim: usize, guard: usize },
    #[error("full twirl undefined for noncompact group")]
    NoncompactGroup,
    #[error("isotropy set is empty")]
    EmptyIsotropySet,
    #[error("isotropy set must be 0..{expected} for a compact group")]
    IsotropySetMismatch { expected: usize },
    #[error("state is not physical: constraint residual {0:e}")]
    NotPhysical(f64),
    #[error("physical space is empty")]
    EmptyPhysicalSpace,
    #[error("clock energy {0} is not a valid trivialisation level")]
    InvalidEpsilonStar(f64),
    #[error("outcome operator is not an orthogonal projector (defect {0:e})")]
    NotProjector(f64),
    #[error("a cutoff set is required for a noncompact group")]
    MissingCutoff,
    #[error("{what}: residual {residual:e} exceeds tolerance {tol:e}")]
    Assertion { what: &'static str, residual: f64, tol: f64 },
}

/// Fail with [`Error::Assertion`] when `residual > tol` (NaN fails too).
pub(crate) fn ensure(what: &'static str, residual: f64, tol: f64) -> Result<()> {
    if residual <= tol {
        Ok(())
    } else {
        Err(Error::Assertion { what, residual, tol })
    }
}
