// SPDX-License-Identifier: Apache-2.0

//! Absmax integer quantization with full-precision outliers.
//!
//! Entries whose magnitude exceeds the outlier threshold are kept exactly and
//! take code 0; the remaining inliers of each vector share one scale. A
//! product of two quantized operands is then
//! `X̂·Ŵ = (X_in + X_out)·(W_in + W_out)`, with the inlier part standing in
//! for an integer GEMM.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{QuantError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    PerTensor,
    #[default]
    PerVector,
}

/// Which index runs along one quantization vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorAxis {
    /// One scale per row (activations `X` in `Y = X·W`).
    Rows,
    /// One scale per column (weights `W` in `Y = X·W`).
    Cols,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantConfig {
    /// `None` switches quantization off entirely.
    pub bits: Option<u32>,
    pub outlier_threshold: f64,
    pub granularity: Granularity,
    pub symmetric: bool,
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self {
            bits: Some(8),
            outlier_threshold: 6.0,
            granularity: Granularity::PerVector,
            symmetric: true,
        }
    }
}

impl QuantConfig {
    pub fn off() -> Self {
        Self {
            bits: None,
            ..Self::default()
        }
    }

    pub fn int(bits: u32) -> Self {
        Self {
            bits: Some(bits),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.bits {
            if !(2..=16).contains(&b) {
                return Err(QuantError::Config(format!("bits {b} outside 2..=16")));
            }
        }
        if !(self.outlier_threshold > 0.0) {
            return Err(QuantError::Config(format!(
                "outlier threshold {} must be positive",
                self.outlier_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTensor {
    pub bits: u32,
    pub axis: Option<VectorAxis>,
    pub codes: Array2<i32>,
    /// One per vector, or a single entry for per-tensor scaling.
    pub scales: Vec<f64>,
    /// Empty for symmetric scaling.
    pub zero_points: Vec<i32>,
    pub outliers: Vec<((usize, usize), f64)>,
}

impl QuantizedTensor {
    fn vector_of(&self, r: usize, c: usize) -> usize {
        match self.axis {
            None => 0,
            Some(VectorAxis::Rows) => r,
            Some(VectorAxis::Cols) => c,
        }
    }

    pub fn scale_at(&self, r: usize, c: usize) -> f64 {
        self.scales[self.vector_of(r, c)]
    }

    pub fn dequantize(&self) -> Array2<f64> {
        let mut out = Array2::from_shape_fn(self.codes.raw_dim(), |(r, c)| {
            let v = self.vector_of(r, c);
            let zp = self.zero_points.get(v).copied().unwrap_or(0);
            (self.codes[[r, c]] - zp) as f64 * self.scales[v]
        });
        for &((r, c), v) in &self.outliers {
            out[[r, c]] = v;
        }
        out
    }
}

fn check_finite(x: ArrayView2<f64>) -> Result<()> {
    for ((r, c), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(QuantError::NonFinite(r, c));
        }
    }
    Ok(())
}

/// Quantizes along rows (per-vector) or as a whole (per-tensor).
pub fn quantize(x: ArrayView2<f64>, cfg: &QuantConfig) -> Result<QuantizedTensor> {
    quantize_along(x, cfg, VectorAxis::Rows)
}

pub fn quantize_along(
    x: ArrayView2<f64>,
    cfg: &QuantConfig,
    axis: VectorAxis,
) -> Result<QuantizedTensor> {
    cfg.validate()?;
    let bits = cfg
        .bits
        .ok_or_else(|| QuantError::Config("quantization is off".into()))?;
    check_finite(x)?;

    let axis = match cfg.granularity {
        Granularity::PerTensor => None,
        Granularity::PerVector => Some(axis),
    };
    let n_vec = match axis {
        None => 1,
        Some(VectorAxis::Rows) => x.nrows(),
        Some(VectorAxis::Cols) => x.ncols(),
    };
    let vec_of = |r: usize, c: usize| match axis {
        None => 0,
        Some(VectorAxis::Rows) => r,
        Some(VectorAxis::Cols) => c,
    };
    let is_outlier = |v: f64| v.abs() > cfg.outlier_threshold;

    let mut lo = vec![f64::INFINITY; n_vec];
    let mut hi = vec![f64::NEG_INFINITY; n_vec];
    let mut outliers = Vec::new();
    for ((r, c), &v) in x.indexed_iter() {
        if is_outlier(v) {
            outliers.push(((r, c), v));
        } else {
            let k = vec_of(r, c);
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }

    let qmax = (1i32 << (bits - 1)) - 1;
    let qmin = -(1i32 << (bits - 1));
    let mut scales = vec![1.0; n_vec];
    let mut zero_points = Vec::new();
    if cfg.symmetric {
        for k in 0..n_vec {
            let absmax = lo[k].abs().max(hi[k].abs());
            if absmax.is_finite() && absmax > 0.0 {
                scales[k] = absmax / qmax as f64;
            }
        }
    } else {
        zero_points = vec![0; n_vec];
        for k in 0..n_vec {
            if lo[k].is_finite() && hi[k] > lo[k] {
                let (l, h) = (lo[k].min(0.0), hi[k].max(0.0));
                scales[k] = (h - l) / (qmax - qmin) as f64;
                zero_points[k] = qmin - (l / scales[k]).round() as i32;
            }
        }
    }

    let codes = Array2::from_shape_fn(x.raw_dim(), |(r, c)| {
        let v = x[[r, c]];
        if is_outlier(v) {
            return 0;
        }
        let k = vec_of(r, c);
        let zp = zero_points.get(k).copied().unwrap_or(0);
        ((v / scales[k]).round() as i32 + zp).clamp(qmin, qmax)
    });

    Ok(QuantizedTensor {
        bits,
        axis,
        codes,
        scales,
        zero_points,
        outliers,
    })
}

/// Effective operand seen by the product: the dequantized tensor, or the
/// input itself when quantization is off.
pub fn fake_quantize(
    x: ArrayView2<f64>,
    cfg: &QuantConfig,
    axis: VectorAxis,
) -> Result<Array2<f64>> {
    match cfg.bits {
        None => {
            check_finite(x)?;
            Ok(x.to_owned())
        }
        Some(_) => Ok(quantize_along(x, cfg, axis)?.dequantize()),
    }
}

/// `Y = X̂·Ŵ` with per-row activation scales and per-column weight scales.
pub fn quantized_matmul(
    x: ArrayView2<f64>,
    w: ArrayView2<f64>,
    cfg: &QuantConfig,
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
    if cfg.bits.is_none() {
        check_finite(x)?;
        check_finite(w)?;
        return Ok(x.dot(&w));
    }
    let qx = quantize_along(x, cfg, VectorAxis::Rows)?;
    let qw = quantize_along(w, cfg, VectorAxis::Cols)?;
    Ok(decomposed_product(&qx, &qw))
}

/// Inlier product through integer codes, plus every term that touches an
/// outlier in floating point.
pub fn decomposed_product(qx: &QuantizedTensor, qw: &QuantizedTensor) -> Array2<f64> {
    let (m, k) = qx.codes.dim();
    let n = qw.codes.ncols();
    let xin = inlier_values(qx);
    let win = inlier_values(qw);
    let mut y = xin.dot(&win);
    let xout = sparse_dense(qx, (m, k));
    let wout = sparse_dense(qw, (k, n));
    if !qx.outliers.is_empty() {
        y += &xout.dot(&(&win + &wout));
    }
    if !qw.outliers.is_empty() {
        y += &xin.dot(&wout);
    }
    y
}

fn inlier_values(q: &QuantizedTensor) -> Array2<f64> {
    let mut v = q.dequantize();
    for &((r, c), _) in &q.outliers {
        v[[r, c]] = 0.0;
    }
    v
}

fn sparse_dense(q: &QuantizedTensor, dim: (usize, usize)) -> Array2<f64> {
    let mut d = Array2::zeros(dim);
    for &((r, c), v) in &q.outliers {
        d[[r, c]] = v;
    }
    d
}

/// Largest |dequantized − original| over inliers, in units of each entry's scale.
pub fn max_inlier_error_in_scales(x: ArrayView2<f64>, q: &QuantizedTensor) -> f64 {
    let d = q.dequantize();
    let mut worst: f64 = 0.0;
    for ((r, c), v) in x.indexed_iter() {
        if q.outliers.iter().any(|&(p, _)| p == (r, c)) {
            continue;
        }
        worst = worst.max((d[[r, c]] - v).abs() / q.scale_at(r, c));
    }
    worst
}
