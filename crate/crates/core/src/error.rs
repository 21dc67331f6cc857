use thiserror::Error;

use crate::quad::QuadError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Domain(String),
    #[error("moment of order {order} diverges: shadowing shape {shape} <= {order}")]
    MomentDivergence { order: f64, shape: f64 },
    #[error("numerical evaluation failed: {0}")]
    Eval(String),
    #[error("series route inapplicable: {0}")]
    SeriesInapplicable(String),
    #[error("closed form has a pole (q = {q}); use the quadrature route")]
    ClosedFormPole { q: f64 },
    #[error("moment fit diverged: {0}")]
    FitDiverged(String),
    #[error("empirical moments out of range: {0}")]
    MomentOutOfRange(String),
    #[error("binning error: {0}")]
    Binning(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unit error: {0}")]
    Unit(String),
    #[error("trace of length {len} cannot be split into {parts} virtual UAVs")]
    InsufficientLength { len: usize, parts: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<QuadError> for Error {
    fn from(e: QuadError) -> Self {
        Error::Eval(e.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
