use thiserror::Error;

use crate::algebra::StarWord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix data of length {len} is not a square array")]
    NonSquare { len: usize },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("exponent p must be finite and positive, got {0}")]
    InvalidExponent(f64),

    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("letter index {index} out of range for a family of {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("star pattern must be non-empty")]
    EmptyPattern,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exhaustive verification refused for n = {n} (cap {cap}); request sampling")]
    ExhaustiveCap { n: usize, cap: usize },

    #[error("enumeration guard exceeded: {required} > {limit}")]
    GuardExceeded { required: u128, limit: u128 },

    #[error("moment coefficient vanishes for p = {p}, N = {n}, alpha = {alpha}")]
    ZeroCoefficient { p: f64, n: usize, alpha: usize },

    #[error("radius {radius:e} exceeds the admissibility bound {bound:e}")]
    RadiusTooLarge { radius: f64, bound: f64 },

    #[error("extrapolation did not converge (residual {residual:e} > {tolerance:e})")]
    NonConvergence { residual: f64, tolerance: f64 },

    #[error("psi coefficient lambda_{n} vanishes for p = {p}")]
    LambdaZero { p: f64, n: usize },

    #[error("product of basis elements {a} and {b} lies outside the span (residual {residual:e})")]
    ProductOutsideSpan { a: usize, b: usize, residual: f64 },

    #[error("adjoint of basis element {index} lies outside the span (residual {residual:e})")]
    AdjointOutsideSpan { index: usize, residual: f64 },

    #[error("span basis is ill-conditioned (Gram condition number {condition:e})")]
    IllConditionedBasis { condition: f64 },

    #[error("span map is not unital: {0}")]
    NotUnital(String),

    #[error("moment tables differ in shape: {0}")]
    ShapeMismatch(String),

    #[error("constrained moment differs on word {word}: gap {gap:e}")]
    PreconditionFailed { word: StarWord, gap: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}
