// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{count} entries of {matrix} outside [-1, 1], first offenders: {indices:?}")]
    OutOfRange {
        matrix: String,
        count: usize,
        indices: Vec<(usize, usize)>,
    },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("pixel-trial budget exceeded: run needs {required}, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("invalid configuration: {0}")]
    Config(String),
}
