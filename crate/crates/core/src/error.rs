use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),

    #[error("the {0} trick set is not highly symmetric; sign flipping is undefined")]
    NotHighlySymmetric(&'static str),

    #[error("invalid focus set: {0}")]
    InvalidFocusSet(String),

    #[error("no candidate focus set satisfies the polar condition")]
    NoValidCandidate,

    #[error("sign-flip success probability {estimated} is below the required {required}")]
    SuccessTooLow { estimated: f64, required: f64 },

    #[error("detectability bracketing failed: {0}")]
    Bracket(String),

    #[error("at r = {r}: {source}")]
    AtRadius {
        r: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_vector(expected: usize, x: &[f64]) -> Result<()> {
    check_dim(expected, x)?;
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("radius must be positive and finite, got {r}")))
    }
}
