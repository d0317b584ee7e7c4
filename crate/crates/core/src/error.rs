use thiserror::Error;

/// Errors raised by the solvers.
///
/// Numeric payloads are reported as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("step size underflow at t = {t:e} (h = {h:e}, last state u = {u:e}, u' = {du:e})")]
    StepUnderflow { t: f64, h: f64, u: f64, du: f64 },

    #[error("ambiguous trajectory: u = {u:e} near t = {t:e} is below the resolution threshold")]
    AmbiguousTrajectory { t: f64, u: f64 },

    #[error("trajectory is not initially decreasing (u' > 0 at t = {t:e})")]
    NotDecreasing { t: f64 },

    #[error("could not bracket {0}")]
    BracketNotFound(String),

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("integrand does not decay under the tail model")]
    TailDivergence,

    #[error(
        "lambda = {lambda} violates K < C f(0)^(p-2); admissible range is 0 <= lambda < {lambda_max}"
    )]
    CoefficientPrecondition { lambda: f64, lambda_max: f64 },

    #[error("profile file: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
