use thiserror::Error;

use crate::odeint::OdeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid state: density n = {n} must be positive")]
    InvalidState { n: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("entropy violation: n = {n} is not supersonic (J = {j})")]
    EntropyViolation { n: f64, j: f64 },

    #[error("integration failed: {0}")]
    Ode(#[from] OdeError),

    #[error("trajectory branch exhausted: W̃ vanishes at n_* = {n_star}")]
    BranchExhausted { n_star: f64 },

    #[error("singular quadrature: dx/dn blows up near n = {n}")]
    SingularQuadrature { n: f64 },

    #[error("inadmissible initial data: E0 = {e0} but the trajectory gives {on_trajectory}")]
    InadmissibleData { e0: f64, on_trajectory: f64 },

    #[error("domain too short: n_r = {n_r} is reached at x = {x_needed} > L = {length}")]
    DomainTooShort { n_r: f64, x_needed: f64, length: f64 },

    #[error("branch blows up after {x_max} of a required length {length}")]
    BranchBlowUp { x_max: f64, length: f64 },

    #[error("supersonic branch reaches the sonic line at x = {x} (n = {n})")]
    SonicCollision { x: f64, n: f64 },

    #[error("density collapses to vacuum at x = {x}")]
    Vacuum { x: f64 },

    #[error("subsonic branch degenerates onto the sonic line at x = {x} (n = {n})")]
    Degeneracy { x: f64, n: f64 },

    #[error("no shock in bracket [{lo}, {hi}]: M - n_r = {m_lo} and {m_hi} at the ends")]
    NoShockInBracket { lo: f64, hi: f64, m_lo: f64, m_hi: f64 },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("linearized coefficients degenerate at x = {x}: 1 - u^2 = {gap}")]
    CoefficientDegeneracy { x: f64, gap: f64 },

    #[error("query x = {x} outside [{lo}, {hi}]")]
    Range { x: f64, lo: f64, hi: f64 },
}
