use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid alpha {0}: must be positive (zero only in oracle mode)")]
    InvalidAlpha(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("y = {y} lies outside the open strip |y| < {halfwidth}")]
    OutOfDomain { y: f64, halfwidth: f64 },

    #[error("y = {y} lies beyond the integrated profile range {covered}")]
    OutsideCoverage { y: f64, covered: f64 },

    #[error(
        "no grim-reaper barrier for half-width m = {m}: the barrier strip has half-width {halfwidth} \
         (d(alpha) = {d}); maximal admissible m is {max_m}"
    )]
    BarrierUnavailable {
        m: f64,
        halfwidth: f64,
        d: f64,
        max_m: f64,
    },

    #[error("boundary function is not convex: f''({x}) = {second_derivative}")]
    NotConvex { x: f64, second_derivative: f64 },

    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonFailed {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("disk lift {disk} failed: {source}")]
    Lift {
        disk: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("Perron iterate increased by {increase:e} at node {node} in sweep {sweep}")]
    Monotonicity {
        sweep: usize,
        node: usize,
        increase: f64,
        /// Largest decrease of every completed sweep.
        decreases: Vec<f64>,
    },
}
