// SPDX-License-Identifier: Apache-2.0

//! Quantization and analog-noise study for a small transformer classifier:
//! outlier-aware vector-wise INT-b quantization, multiplicative operand
//! noise, quantization-aware fine-tuning and accuracy-versus-noise curves.

pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod noise;
pub mod quantize;
pub mod tape;
pub mod train;

pub use error::{QuantError, Result};
