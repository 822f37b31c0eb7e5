use std::io;

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl HarnessError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Data(_) => 3,
            HarnessError::Numeric(_) => 4,
            HarnessError::Io(_) => 1,
        }
    }
}

/// Attaches a harness category to library errors.
pub(crate) trait Categorize<T> {
    fn config(self) -> Result<T>;
    fn data(self) -> Result<T>;
    fn numeric(self) -> Result<T>;
}

impl<T, E: std::fmt::Display> Categorize<T> for std::result::Result<T, E> {
    fn config(self) -> Result<T> {
        self.map_err(|e| HarnessError::Config(e.to_string()))
    }

    fn data(self) -> Result<T> {
        self.map_err(|e| HarnessError::Data(e.to_string()))
    }

    fn numeric(self) -> Result<T> {
        self.map_err(|e| HarnessError::Numeric(e.to_string()))
    }
}
