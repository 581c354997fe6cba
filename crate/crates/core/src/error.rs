//! Shared error type for the whole crate.

use thiserror::Error;

/// Errors surfaced by group arithmetic, field evaluation and the numerical
/// pipelines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinates must be finite")]
    NonFinite,

    #[error("invalid Heisenberg dimension n = {0}; need n >= 1")]
    InvalidDimension(usize),

    #[error("invalid splitting (n, k) = ({n}, {k}); need 1 <= k <= n")]
    InvalidSplitting { n: usize, k: usize },

    #[error("dilation factor must be positive, got {0}")]
    InvalidScale(f64),

    #[error("frame index {j} out of range for n = {n}")]
    FrameIndex { j: usize, n: usize },

    #[error("vector field index {j} out of range 1..={max}")]
    FieldIndex { j: usize, max: usize },

    #[error("length mismatch: {expected} vs {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("point outside declared domain ({what})")]
    OutOfDomain { what: String },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },

    #[error("derivative requested at a nonsmooth point ({what})")]
    NonsmoothPoint { what: String },

    #[error("grid needs at least 2 nodes per axis, got {0}")]
    GridTooCoarse(usize),

    #[error("integral curve exited the domain at t = {exit_time}")]
    CurveExitedDomain { exit_time: f64 },

    #[error("ODE step size underflow")]
    StepUnderflow,

    #[error("horizontal Jacobian degenerate: |det Xf| = {det:e} below threshold")]
    HorizontalDegeneracy { det: f64 },

    #[error("Newton iteration did not converge within {0} iterations")]
    MaxIterations(usize),

    #[error("empty probe set")]
    EmptyProbeSet,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("mollification radius {eps} too large for box with min side {min_side}")]
    EpsilonTooLarge { eps: f64, min_side: f64 },

    #[error("measure dimension must be nonnegative, got {0}")]
    NegativeMeasureDim(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
