// SPDX-License-Identifier: Apache-2.0

//! Multiplicative Gaussian device noise on matrix-product operands.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{QuantError, Result};
use crate::quantize::{decomposed_product, quantize_along, QuantConfig, VectorAxis};
use oen_core::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplyTo {
    Weights,
    Activations,
    #[default]
    Both,
}

impl ApplyTo {
    pub fn weights(self) -> bool {
        matches!(self, Self::Weights | Self::Both)
    }

    pub fn activations(self) -> bool {
        matches!(self, Self::Activations | Self::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Fresh ε for every product evaluation.
    #[default]
    Redraw,
    /// ε fixed per operand position of each product site for a whole
    /// evaluation, as for static device-to-device variation.
    FrozenPerDevice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviation of ε, as a fraction.
    pub sigma: f64,
    pub apply_to: ApplyTo,
    pub mode: NoiseMode,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma: 0.0,
            apply_to: ApplyTo::Both,
            mode: NoiseMode::Redraw,
        }
    }
}

impl NoiseConfig {
    pub fn with_sigma(sigma: f64) -> Self {
        Self {
            sigma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.sigma) {
            return Err(QuantError::Config(format!(
                "sigma {} outside [0, 1)",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// `m ∘ (1 + ε)` with ε ~ N(0, σ²) drawn in row-major order.
pub fn perturb<R: Rng + ?Sized>(m: ArrayView2<f64>, sigma: f64, rng: &mut R) -> Array2<f64> {
    if sigma == 0.0 {
        return m.to_owned();
    }
    let n = Normal::new(0.0, sigma).expect("validated sigma");
    let mut out = m.to_owned();
    out.mapv_inplace(|v| v * (1.0 + n.sample(rng)));
    out
}

/// One noisy, quantized product `Y = X̂'·Ŵ'` with `X' = X(1+ε_x)`,
/// `W' = W(1+ε_w)`.
pub fn noisy_matmul(
    x: ArrayView2<f64>,
    w: ArrayView2<f64>,
    qcfg: &QuantConfig,
    ncfg: &NoiseConfig,
    seed: u64,
) -> Result<Array2<f64>> {
    if x.ncols() != w.nrows() {
        return Err(QuantError::Shape(format!(
            "X is {}×{}, W is {}×{}",
            x.nrows(),
            x.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    ncfg.validate()?;
    let xs = if ncfg.apply_to.activations() {
        perturb(x, ncfg.sigma, &mut stream_rng(seed, 0, 0))
    } else {
        x.to_owned()
    };
    let ws = if ncfg.apply_to.weights() {
        perturb(w, ncfg.sigma, &mut stream_rng(seed, 1, 0))
    } else {
        w.to_owned()
    };
    match qcfg.bits {
        None => {
            qcfg.validate()?;
            Ok(xs.dot(&ws))
        }
        Some(_) => {
            let qx = quantize_along(xs.view(), qcfg, VectorAxis::Rows)?;
            let qw = quantize_along(ws.view(), qcfg, VectorAxis::Cols)?;
            Ok(decomposed_product(&qx, &qw))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_sigma_quant_off_is_exact() {
        let x = array![[0.1, -0.2, 0.3], [1.1, 0.0, -2.0]];
        let w = array![[0.5, 1.0], [-1.5, 0.25], [2.0, -0.75]];
        let y = noisy_matmul(
            x.view(),
            w.view(),
            &QuantConfig::off(),
            &NoiseConfig::default(),
            1,
        )
        .unwrap();
        assert_eq!(y, x.dot(&w));
    }

    #[test]
    fn deterministic_per_seed() {
        let x = array![[0.1, -0.2], [0.3, 0.4]];
        let w = array![[0.5, 1.0], [-1.5, 0.25]];
        let n = NoiseConfig::with_sigma(0.05);
        let q = QuantConfig::default();
        let a = noisy_matmul(x.view(), w.view(), &q, &n, 3).unwrap();
        assert_eq!(a, noisy_matmul(x.view(), w.view(), &q, &n, 3).unwrap());
        assert_ne!(a, noisy_matmul(x.view(), w.view(), &q, &n, 4).unwrap());
    }

    #[test]
    fn rejects_bad_sigma_and_shape() {
        let x = array![[1.0]];
        assert!(noisy_matmul(
            x.view(),
            x.view(),
            &QuantConfig::off(),
            &NoiseConfig::with_sigma(1.0),
            0
        )
        .is_err());
        let w = array![[1.0, 2.0], [3.0, 4.0]];
        assert!(noisy_matmul(
            x.view(),
            w.view(),
            &QuantConfig::off(),
            &NoiseConfig::default(),
            0
        )
        .is_err());
    }

    #[test]
    fn apply_to_selects_operand() {
        let x = array![[1.0, 1.0]];
        let w = array![[1.0], [1.0]];
        let q = QuantConfig::off();
        let only_w = NoiseConfig {
            sigma: 0.1,
            apply_to: ApplyTo::Weights,
            ..Default::default()
        };
        let only_x = NoiseConfig {
            apply_to: ApplyTo::Activations,
            ..only_w
        };
        let a = noisy_matmul(x.view(), w.view(), &q, &only_w, 5).unwrap();
        let b = noisy_matmul(x.view(), w.view(), &q, &only_x, 5).unwrap();
        assert_ne!(a, x.dot(&w));
        assert_ne!(b, x.dot(&w));
        assert_ne!(a, b);
    }
}
