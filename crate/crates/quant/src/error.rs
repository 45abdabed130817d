// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, QuantError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantError {
    #[error("invalid quantization config: {0}")]
    Config(String),

    #[error("non-finite value at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training stopped at accuracy {accuracy:.4} after {epochs} epochs, bar is {bar}")]
    NotConverged {
        accuracy: f64,
        bar: f64,
        epochs: usize,
    },

    #[error(transparent)]
    Core(#[from] oen_core::Error),
}
