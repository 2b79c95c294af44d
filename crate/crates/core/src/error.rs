use thiserror::Error;

/// Errors raised by the library. Each variant names the violated precondition.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not an isometry (residual {residual:e})")]
    NotIsometry { residual: f64 },
    #[error("sequence is not equi-isoclinic with parameter in [0,1): {0}")]
    NotEquiIsoclinic(String),
    #[error("ambient dimension {d} is smaller than 2r = {}", 2 * r)]
    DimensionTooSmall { d: usize, r: usize },
    #[error("sequence is not a tight fusion frame (residual {residual:e})")]
    NotTight { residual: f64 },
    #[error("d = rn, so the Naimark complement is zero-dimensional")]
    NoComplement,
    #[error("ratio mismatch: {d1}/{r1} != {d2}/{r2}")]
    RatioMismatch {
        d1: usize,
        r1: usize,
        d2: usize,
        r2: usize,
    },
    #[error("input is not an EITFF: {0}")]
    NotEitff(String),
    #[error("bound is vacuous: nr = {nr} < d = {d}")]
    BoundVacuous { nr: usize, d: usize },
    #[error("parameters out of scope: {0}")]
    OutOfScope(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("isoclinism parameter is 1; corner-space bounds do not apply")]
    AlphaOne,
    #[error("basis of length {len} is too short for a simplex with {m} vertices")]
    BasisTooShort { len: usize, m: usize },
    #[error("r = {0} has dyadic part divisible by 16; real family not constructed")]
    UnsupportedDyadicPart(usize),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("dimension not certified: singular-value gap {gap:e} below {required:e} at rank {rank}")]
    Uncertain { rank: usize, gap: f64, required: f64 },
    #[error("closed-form dimension violated: {0}")]
    FormulaViolation(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
