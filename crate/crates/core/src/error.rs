use crate::spin_ops::Basis;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("site {site} out of range for {n} spins")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("{n} spins exceeds the full-basis limit of {max}")]
    TooManySpins { n: usize, max: usize },
    #[error("basis mismatch: {0:?} vs {1:?}")]
    BasisMismatch(Basis, Basis),
    #[error("operator is not Hermitian (relative deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("spin placement failed: {0}")]
    Placement(String),
    #[error("spins {0} and {1} coincide")]
    CoincidentSpins(usize, usize),
    #[error("sequence error: {0}")]
    Sequence(String),
    #[error("numerical contract violated: {0}")]
    Contract(String),
    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
