use magstep_linalg::LinalgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter domain: {0}")]
    Domain(String),
    #[error("no sign change of mu' on [{lo}, {hi}]: mu'({lo}) = {dlo:.3e}, mu'({hi}) = {dhi:.3e}")]
    Bracket { lo: f64, hi: f64, dlo: f64, dhi: f64 },
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("format: {0}")]
    Format(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of a numerical solver rather than bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::Linalg(_) | Error::Bracket { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
