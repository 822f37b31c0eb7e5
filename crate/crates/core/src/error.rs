use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller combined arguments in an unsupported way.
    #[error("usage error: {0}")]
    Usage(String),

    /// The contraction condition a + bγ < 1 does not hold.
    #[error("contraction violated: a + b*gamma = {value} >= 1 (a = {a}, b = {b}, gamma = {gamma})")]
    Contraction { a: f64, b: f64, gamma: f64, value: f64 },

    /// The intensity left the representable range.
    #[error("explosion at t = {t}: ln(sigma) = {log_sigma}")]
    Explosion { t: usize, log_sigma: f64 },

    /// A checked property of the model failed numerically.
    #[error("property failure: {0}")]
    Property(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
