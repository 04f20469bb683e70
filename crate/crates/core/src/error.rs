use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to
/// print a one-line diagnostic.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain is disconnected: voxels {a:?} and {b:?} lie in different components")]
    Disconnected { a: Vec<i64>, b: Vec<i64> },

    #[error("domain is empty")]
    EmptyDomain,

    #[error("root point {0:?} lies outside the domain")]
    RootOutside(Vec<f64>),

    #[error("adjacency graph is disconnected: cube {0} unreachable from the root")]
    Unreachable(usize),

    #[error("chain for cube {cube} fails condition: {reason}")]
    InvalidChain { cube: usize, reason: String },

    #[error("cube {cube} misses the distance bounds: ratio {ratio}")]
    DistanceBound { cube: usize, ratio: f64 },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("not enough cubes in generation {generation}: need {need}, have {have}")]
    NotEnoughCubes { generation: u32, need: usize, have: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

/// Checks the exponent ranges shared by most entry points.
pub fn check_exponents(p: f64, q: f64, delta: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    if !(q.is_finite() && q >= 1.0) {
        return Err(invalid("q", format!("must be >= 1, got {q}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0,1), got {delta}")));
    }
    Ok(())
}

pub fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid("tau", format!("must lie in (0,1), got {tau}")));
    }
    Ok(())
}
