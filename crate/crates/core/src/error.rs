use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("state is not passive")]
    NotPassive,

    #[error("probability p{index} = {value} must be strictly positive")]
    NonPositiveProbability { index: usize, value: f64 },

    #[error("degenerate energy gap between levels {0} and {1}")]
    DegenerateGap(usize, usize),

    #[error("target {target} outside reachable range [{low}, {high}]")]
    OutOfRange { target: f64, low: f64, high: f64 },

    #[error("closed form requires n >= 2, got m = {m}, n = {n}")]
    ClosedFormUnavailable { m: usize, n: usize },

    #[error("invalid cycle parameters: {0}")]
    InvalidCycle(String),

    #[error("fixed-point system is singular (stationary machine state not unique)")]
    SingularSystem,

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("fixed-point solution has a negative entry q{index} = {value:e}")]
    NegativeStationaryEntry { index: usize, value: f64 },

    #[error("state lies on the thermal manifold and cannot be activated")]
    ThermalState,

    #[error("state is not in the region R1 (beta_hot < beta_cold required)")]
    NotInR1,

    #[error("empty alpha range: lower bound {lower} >= upper bound {upper}")]
    EmptyAlphaRange { lower: f64, upper: f64 },

    #[error("alpha = {alpha} outside the admissible range ({lower}, {upper})")]
    AlphaOutOfRange { alpha: f64, lower: f64, upper: f64 },

    #[error("rational approximation of the gap ratio not found within tolerance {0:e}")]
    NoRationalApproximation(f64),

    #[error("subspace window starting at {start} is invalid for a {dim}-level system")]
    WindowOutOfRange { start: usize, dim: usize },

    #[error("subspace window starting at {0} has zero probability mass")]
    EmptyWindow(usize),

    #[error("step size underflow while integrating trajectory at t = {0}")]
    StepRejected(f64),

    #[error("ancilla marginal changed by {0:e}; reusability violated")]
    ReusabilityViolated(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
