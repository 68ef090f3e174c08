use thiserror::Error;

/// Failures raised by the model, the integrator and the analyses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative delay theta({t}) = {theta}: lagged time would exceed t")]
    InvalidDelay { t: f64, theta: f64 },

    #[error("lagged time g({t}) = {lag} lies ahead of t")]
    LagAhead { t: f64, lag: f64 },

    #[error("negative state N = {n}, N(g(t)) = {n_lag} at t = {t}")]
    InvalidState { t: f64, n: f64, n_lag: f64 },

    #[error("no positive equilibrium at t = {t}: r = {r} does not exceed b = {b}")]
    NoPositiveEquilibrium { t: f64, r: f64, b: f64 },

    #[error("positivity lost at t = {t}: N = {value}")]
    PositivityLoss { t: f64, value: f64 },

    #[error("t = {t} is beyond the end of the trajectory ({t_end})")]
    OutOfRange { t: f64, t_end: f64 },

    #[error("premise `{premise}` violated at t = {t} (value {value})")]
    PremiseViolation { premise: String, t: f64, value: f64 },

    #[error(
        "periodic solve did not converge: residual {residual:e} after {iterations} iterations"
    )]
    NotConverged { residual: f64, iterations: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
