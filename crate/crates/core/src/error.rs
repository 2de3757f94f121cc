use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("k must be ≥ 1 (got {0})")]
    InvalidK(u32),
    #[error("relation {relation} is only defined for k = {required} (got k = {k})")]
    RelationNotApplicable {
        relation: &'static str,
        required: u32,
        k: u32,
    },
    #[error("operands belong to different slice algebras")]
    AlgebraMismatch,
    #[error("operands have different slice counts ({0} vs {1})")]
    SliceCountMismatch(usize, usize),
    #[error("slice index {index} out of range for {slices} slices")]
    SliceOutOfRange { index: usize, slices: usize },
    #[error("{requested} slices exceed the configured cap of {cap}")]
    TooManySlices { requested: usize, cap: usize },
    #[error("nilpotent inverse needs a nonzero constant term")]
    ZeroConstantTerm,
    #[error("nilpotent logarithm needs constant term 1 (got {re}{im:+}i)")]
    LogConstantTerm { re: f64, im: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polynomial is not a kernel: {0}")]
    NotAKernel(String),
    #[error("linear system is singular (pivot {0:e})")]
    Singular(f64),
    #[error("{0} did not converge")]
    NotConverged(&'static str),
    #[error("inconsistent polynomial algebra: |c_{index}|² = {value}")]
    NegativeNorm { index: usize, value: f64 },
    #[error("conjugation is only defined here for functions of z̄ alone")]
    NotAntiholomorphic,
    #[error("{0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
