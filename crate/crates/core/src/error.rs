use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument had the wrong dimension or was outside its valid range.
    InvalidArgument(String),
    /// A factorization or division hit a (near) singular quantity.
    NumericalDegeneracy(String),
    /// The simulated state became non-finite.
    SimulationDivergence { t: f64, q: [f64; 2], qd: [f64; 2] },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::NumericalDegeneracy(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NumericalDegeneracy(msg) => write!(f, "numerical degeneracy: {msg}"),
            Error::SimulationDivergence { t, q, qd } => write!(
                f,
                "simulation diverged at t = {t:.4} s (q = [{:.3e}, {:.3e}], qd = [{:.3e}, {:.3e}])",
                q[0], q[1], qd[0], qd[1]
            ),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_dim(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::invalid(alloc::format!(
            "{what}: expected dimension {expected}, got {got}"
        )))
    }
}
