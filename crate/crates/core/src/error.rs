use thiserror::Error;

/// Failures raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature: refinement budget exhausted on [{a}, {b}] (estimate {estimate:e}, tol {tol:e})")]
    NonConvergence { a: f64, b: f64, estimate: f64, tol: f64 },
    #[error("front_dynamics: no sign change for eta at tau = {tau}")]
    BracketFailure { tau: f64 },
    #[error("front_dynamics: eta never drops below {threshold:e} (minimum {min_eta:e})")]
    NoContact { threshold: f64, min_eta: f64 },
    #[error("temperature_field: step {dt:e} violates the stability bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("weak_residuals: grid spacing {dx:e} does not resolve epsilon = {epsilon:e}")]
    ResolutionError { dx: f64, epsilon: f64 },
    #[error("weak_residuals: degenerate fit ({0})")]
    DegenerateFit(String),
    #[error("pde_reference: |u| = {max_u} exceeds 2 at t = {t}")]
    Instability { t: f64, max_u: f64 },
    #[error("pde_reference: fronts never merged before t = {t_end}")]
    NoConfluence { t_end: f64 },
    #[error("scenario: parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("scenario: {0}")]
    Validation(String),
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
