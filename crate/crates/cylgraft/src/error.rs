use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("argument outside the formula's domain: {0}")]
    DomainError(String),
    #[error("geometry inconsistent with the capacity sandwich: lower {lower} >= upper {upper}")]
    InconsistentGeometry { lower: f64, upper: f64 },
    #[error("resolution too coarse: {0}")]
    ResolutionError(String),
    #[error("boundary loops cannot be glued: {0}")]
    GluingMismatch(String),
    #[error("surface has genus zero")]
    GenusZero,
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },
    #[error("period system is singular: {0}")]
    SingularPeriodSystem(String),
    #[error("no region tagged {0:?}")]
    UnknownTag(String),
    #[error("expected exactly two boundary loops, found {0}")]
    BoundaryCountError(usize),
    #[error("matrix is not positive definite: {0}")]
    DegenerateP(String),
    #[error("operation requires {expected} mode")]
    ModeMismatch { expected: &'static str },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("malformed mesh file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
