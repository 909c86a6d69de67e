use thiserror::Error;

/// Errors surfaced by the exact kernels.
///
/// Internal invariant violations panic; these variants are the contract
/// failures a caller can trigger with bad input.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("non-invertible in monomial fragment")]
    NonInvertibleScalar,
    #[error("division by zero")]
    DivisionByZero,
    #[error("mismatched number of variable pairs: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("chart mismatch")]
    ChartMismatch,
    #[error("degenerate: no isolated critical points")]
    DegenerateFunction,
    #[error("empty interval")]
    EmptyInterval,
    #[error("empty grid")]
    EmptyGrid,
    #[error("focal point: equivalence undefined")]
    FocalPoint,
    #[error("non-transverse presentation")]
    NonTransverse,
    #[error("all translation generators are zero")]
    ZeroGenerators,
    #[error("non-invertible element in place of a cocycle value")]
    NonInvertibleElement,
    #[error("subgroup is not normal")]
    NonNormalSubgroup,
    #[error("embedding of the kernel is not equivariant")]
    NonEquivariantEmbedding,
    #[error("action data violates an invariant: {0}")]
    ActionInvariant(String),
    #[error("bar truncation too small: need depth {needed}, have {have}")]
    TruncationTooSmall { needed: usize, have: usize },
    #[error("torus window violation: index {0} outside |k| <= {1}")]
    WindowViolation(i64, i64),
    #[error("increase kmax/qmax")]
    WindowTooSmall,
    #[error("empty point set")]
    EmptyPointSet,
    #[error("syntax error at column {col}: {msg}")]
    Parse { col: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, CoreError>;
