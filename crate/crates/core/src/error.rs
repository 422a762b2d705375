use thiserror::Error;

/// A violated constraint on the exponent tuple `(n, p, s, q)`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("dimension n = {0} must be at least 2")]
    DimensionTooSmall(usize),
    #[error("p = {0} must satisfy p > 1")]
    PNotAboveOne(f64),
    #[error("p = {p} must satisfy p < n = {n}")]
    PNotBelowDimension { p: f64, n: usize },
    #[error("s = {0} must satisfy s >= 1")]
    SBelowOne(f64),
    #[error("s = {s} must satisfy s < q = {q}")]
    SNotBelowQ { s: f64, q: f64 },
    #[error("q = {q} must satisfy q < p* = {p_star}")]
    QNotBelowCritical { q: f64, p_star: f64 },
    #[error("exponent {0} is not finite")]
    NonFinite(&'static str),
    #[error("stored field `{field}` = {stored} disagrees with recomputed value {expected}")]
    DerivedMismatch {
        field: &'static str,
        stored: f64,
        expected: f64,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamsError),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad inputs rather than by a numerical breakdown.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::Degenerate(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
