use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid permittivity profile: {0}")]
    InvalidProfile(String),

    #[error("degenerate domain: min(u) = {min_u} is not above -1 + {gap_tol}")]
    DegenerateDomain { min_u: f64, gap_tol: f64 },

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("singular force: u = {u} at node {node} touches the ground plate")]
    SingularForce { node: usize, u: f64 },

    #[error("blow-up at t = {t}: non-finite deflection")]
    BlowUp { t: f64, state: Vec<f64> },

    #[error("invalid bracket [{lo}, {hi}]: both endpoints classify as {class}")]
    InvalidBracket { lo: f64, hi: f64, class: &'static str },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
