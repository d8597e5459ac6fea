use thiserror::Error;

use crate::profile::StopKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MembraneError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no {kind:?} event before sigma = {sigma_max}")]
    EventNotFound { kind: StopKind, sigma_max: f64 },

    #[error("curvature blow-up: |phi'| = {phi_prime:.3e} at sigma = {sigma}")]
    SingularBlowup { sigma: f64, phi_prime: f64 },

    #[error("profile crossed z = 0 near sigma = {sigma}")]
    HalfSpaceExit { sigma: f64 },

    #[error("step size underflow ({step:.3e}) at sigma = {sigma}")]
    StepSizeUnderflow { sigma: f64, step: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("boundary condition violated: {0}")]
    BoundaryCondition(String),

    #[error("operation needs a uniform grid produced by `resample`")]
    NotUniform,

    #[error("grid too coarse: {interior} interior nodes, need at least {minimum}")]
    GridTooCoarse { interior: usize, minimum: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    ConvergenceFailure {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("eigenproblem weight is not positive at node {index}")]
    DegenerateWeight { index: usize },

    #[error("operator is singular: {lambda:.3e} is an eigenvalue within tolerance")]
    SingularOperator { lambda: f64 },

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
}

pub type Result<T> = std::result::Result<T, MembraneError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> MembraneError {
    MembraneError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
