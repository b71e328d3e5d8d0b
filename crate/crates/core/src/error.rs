use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The two lowest eigenvalues are closer than the degeneracy threshold, so
    /// the ground space is not one-dimensional.
    #[error("degenerate ground state: E0 = {e0:.15e}, E1 = {e1:.15e}")]
    DegenerateGroundState { e0: f64, e1: f64 },

    #[error("solver failed ({what}): residual {residual:.3e}")]
    Solver { what: String, residual: f64 },

    #[error("assembly error: Hermiticity residual {residual:.3e}")]
    Assembly { residual: f64 },

    #[error("numerical error: {what} (estimate {estimate:.3e}, bound {bound:.3e})")]
    Numerical {
        what: String,
        estimate: f64,
        bound: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
