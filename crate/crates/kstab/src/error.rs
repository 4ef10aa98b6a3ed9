//! Crate-wide error type.

use crate::rat::QVec;

/// A schema violation in a problem file, with a JSON-pointer location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.pointer, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("restricted root {0} is zero or has non-positive self-pairing")]
    DegenerateRoot(usize),
    #[error("reflection group closure exceeded {0} elements")]
    ClosureOverflow(usize),
    #[error("invalid input data: {0}")]
    InvalidData(String),
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope is empty")]
    EmptyPolytope,
    #[error("polytope is lower-dimensional")]
    LowerDimensional,
    #[error("polytope is not invariant under the reflection group")]
    NotWeylInvariant,
    #[error("chamber data does not extend to an invariant convex polytope; witness {witness:?}")]
    NotExtendable { witness: QVec },
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("halfspace {0} does not support a facet")]
    BadFacet(usize),
    #[error("weight function integrates to zero over the polytope")]
    ZeroMass,
    #[error("piecewise-linear function has a non-dominant gradient")]
    NotDominant,
    #[error("moment matrix is singular; affine test functions are dependent")]
    SingularMoment,
    #[error("outer facet {0} has offset zero and a non-vanishing weight")]
    ZeroOffsetFacet(usize),
    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),
    #[error("input function is not in the kernel: functional value {0}")]
    NotAKernelElement(String),
    #[error("rank {0} is not supported by this operation")]
    RankUnsupported(usize),
    #[error("boundary samples are not convex along edge {0}")]
    NonConvexEdgeData(usize),
    #[error("no central affine support exists at the normalization point")]
    NoCentralSupport,
    #[error("function is zero after projecting out kernel directions")]
    ZeroNorm,
    #[error("iteration did not converge; last residual {0}")]
    NoConvergence(f64),
    #[error("problem file is invalid")]
    Schema(Vec<SchemaError>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
