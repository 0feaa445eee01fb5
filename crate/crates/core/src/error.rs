//! Error type shared across the solver library.

use thiserror::Error;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("estimated limsup of f(t)/t near 0 is {0} >= 0; linearization at 0 is not negative definite")]
    NotNegativeDefiniteAtZero(f64),
    #[error("primitive F is non-positive on the whole search bracket [{0}, {1}]")]
    NoPositivePrimitive(f64, f64),
    #[error("split is not subordinate: F1(zeta) = {f1} <= F2(zeta) = {f2}")]
    SplitNotSubordinate { f1: f64, f2: f64 },
    #[error("lambda = {0} outside [{1}, 1]")]
    LambdaOutOfRange(f64, f64),
    #[error("axis would have {0} nodes; at least 8 are required")]
    BadResolution(usize),
    #[error("value array has {got} entries but the grid has {want} nodes")]
    ShapeMismatch { got: usize, want: usize },
    #[error("operation requires a swap-symmetric (O1/O2) grid; got {0}")]
    WrongSymmetryClass(String),
    #[error("profile radius R = {r} must exceed 2k = {min}")]
    BadRadius { r: f64, min: f64 },
    #[error("grid too small for the requested construction: need {axis} axis extent >= {need}, have {have}")]
    GridTooSmall { axis: usize, need: f64, have: f64 },
    #[error("search exhausted: {0}")]
    NotFound(String),
    #[error("dilation exceeded cap {0} without reaching a negative energy")]
    DilationCapExceeded(f64),
    #[error("path endpoint has J_lambda = {0} >= 0")]
    BadEndpoint(f64),
    #[error("scaling-path base has integral F^lambda = {0} <= 0")]
    BadBase(f64),
    #[error("descent stalled at gradient residual {residual:.3e} (tolerance {tol:.3e})")]
    NoDescent { residual: f64, tol: f64 },
    #[error("path no longer satisfies the admissible-class endpoint conditions")]
    BrokenPath,
    #[error("minimax level increased from {prev} to {next} along the continuation (tolerance {tol})")]
    MonotonicityViolation { prev: f64, next: f64, tol: f64 },
    #[error("no seed with positive nonlinear potential was supplied")]
    NoAdmissibleSeed,
    #[error("windowed mass {0:.3e} is below the vanishing threshold {1:.3e}")]
    BelowThreshold(f64, f64),
    #[error("profile extraction hit the iteration cap {0} before the residual vanished")]
    IterationCap(usize),
    #[error("adaptive integrator step underflow at r = {0}")]
    StiffnessFailure(f64),
    #[error("no undershoot/overshoot bracket found in [{0}, {1}]")]
    NoBracket(f64, f64),
    #[error("symmetric minimax supports k in {{1, 2}}; got {0}")]
    UnsupportedK(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
