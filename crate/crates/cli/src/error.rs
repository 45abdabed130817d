// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag, field or value on the command line. Exit code 2.
    #[error("{0}")]
    Usage(String),

    /// The configuration loaded but breaks a rule. Exit code 1.
    #[error("invalid configuration:\n{0}")]
    Invalid(String),

    /// A model or simulation step failed. Exit code 1.
    #[error("{0}")]
    Runtime(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<oen_core::Error> for CliError {
    fn from(e: oen_core::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<oen_quant::QuantError> for CliError {
    fn from(e: oen_quant::QuantError) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Runtime(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
