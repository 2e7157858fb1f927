use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("slot label error: {0}")]
    Label(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    /// A probability came out with a non-negligible imaginary part, which
    /// points at a conjugation mistake somewhere upstream.
    #[error("numerical convention violated: {0}")]
    Convention(String),

    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),

    #[error("degenerate conditioning: {0}")]
    DegenerateConditioning(String),

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("invalid field `{path}`: {message}")]
    Schema { path: String, message: String },
}

impl Error {
    /// Field named by `path` is absent.
    pub fn schema_missing(path: impl Into<String>) -> Self {
        Self::schema(path, "missing")
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
