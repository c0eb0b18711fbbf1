use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("phase slope is singular on the predator isocline s = lambda")]
    SingularSlope,

    #[error("no root: x - {a} ln x = {c} has no solution (minimum is {min})")]
    NoRoot { a: f64, c: f64, min: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("parameters a = {a}, lambda = {lambda} violate the small-parameter assumption (use force to evaluate anyway)")]
    NotStarStar { a: f64, lambda: f64 },

    #[error("integration step budget of {max_steps} exhausted at tau = {tau}")]
    StepBudget { max_steps: usize, tau: f64 },

    #[error("step size collapsed to {h:e} at tau = {tau}")]
    StepSizeUnderflow { tau: f64, h: f64 },

    #[error("event localization failed near tau = {tau}")]
    EventLocalization { tau: f64 },

    #[error("events out of order: expected {expected}, found {found} at tau = {tau}")]
    EventOrder {
        expected: &'static str,
        found: &'static str,
        tau: f64,
    },

    #[error("return map did not converge after {iters} iterations (last defect {defect:e})")]
    NonConvergence { iters: usize, defect: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
