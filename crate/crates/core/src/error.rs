use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fundamental tensor undefined at origin")]
    TensorAtOrigin,

    #[error("matrix is not symmetric positive-definite: {0}")]
    NotSpd(String),

    #[error("randers drift too large: |b|_a = {0} (must be < 1 - 1e-9)")]
    RandersDrift(f64),

    #[error("group mismatch: {left} vs {right}")]
    GroupMismatch { left: String, right: String },

    #[error("matrix is not an element of {group}")]
    NotGroupElement { group: String },

    #[error("vector not tangent to group (residual {residual:e})")]
    NotTangent { residual: f64 },

    #[error("matrix outside the Lie algebra span (residual {residual:e})")]
    NotInAlgebra { residual: f64 },

    #[error("representative change must stay in the coset")]
    NotInSubgroup,

    #[error("subgroup and complement are not complementary: {0}")]
    NotComplementary(String),

    #[error("complement is not orthogonal (residual {residual:e})")]
    NotOrthogonal { residual: f64 },

    #[error("subalgebra is not an ideal (residual {residual:e}); induced metric requires a normal subgroup")]
    NotIdeal { residual: f64 },

    #[error("side mismatch: {0}")]
    SideMismatch(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal error: {0}")]
    Internal(String),
}
