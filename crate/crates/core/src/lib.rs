// SPDX-License-Identifier: Apache-2.0

//! Performance model and functional simulator for an optoelectronic neural
//! processing unit built on a CMOS image sensor process.
//!
//! Two-tap demodulator pixels act as multiply-accumulate units: an emitter row
//! broadcasts one input vector per token, a column DAC gates the photocurrent
//! with one weight per clock, and the in-pixel capacitors integrate the dot
//! product. The crate is split along that signal chain:
//!
//! - [`workload`]: transformer dimensions and operation counts.
//! - [`hardware`]: array, clock, optical, energy and memory configuration.
//! - [`dac_scaling`]: energy/area scaling of the column and row DACs.
//! - [`energy_snr`]: the shot-noise vs. quantization bound on pulse energy.
//! - [`perf_analytics`]: closed-form speed, delay, power and area.
//! - [`pixel_sim`]: charge-level simulation of one demodulator pixel.
//! - [`mmm_engine`]: tiling of matrix products onto the array, with timing.

pub mod constants;
pub mod dac_scaling;
pub mod energy_snr;
pub mod error;
pub mod hardware;
pub mod mmm_engine;
pub mod perf_analytics;
pub mod pixel_sim;
pub mod rng;
pub mod workload;

pub use error::{Error, Result};
pub use hardware::HardwareConfig;
pub use workload::TransformerDims;
