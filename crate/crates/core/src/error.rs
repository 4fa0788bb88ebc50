use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{name} must be a finite number")]
    NotFinite { name: &'static str },
    #[error("mu must satisfy 0 < mu < 1/2, got {0}")]
    Mu(f64),
    #[error("eps must satisfy 0 < eps < 1/2, got {0}")]
    Eps(f64),
    #[error("r must satisfy 0 < r < 1, got {0}")]
    R(f64),
    #[error("theta must satisfy 0 <= theta <= 1, got {0}")]
    Theta(f64),
    #[error("buyer mix {0:?} is not a point of the simplex")]
    Mix([f64; 4]),
    #[error("seller cooperator fraction must lie in [0, 1], got {0}")]
    SellerFraction(f64),
    #[error("invalid option: {0}")]
    Option(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("adaptive step fell below {h_min:e} at t = {t}")]
    StepFailure { t: f64, h_min: f64 },
    #[error("fixed step {step} produced a non-finite state at t = {t}")]
    NonFinite { t: f64, step: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
}
