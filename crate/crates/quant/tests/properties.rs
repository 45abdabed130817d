// SPDX-License-Identifier: Apache-2.0

use ndarray::Array2;
use proptest::prelude::*;

use oen_quant::noise::{noisy_matmul, NoiseConfig};
use oen_quant::quantize::{
    decomposed_product, max_inlier_error_in_scales, quantize_along, QuantConfig, VectorAxis,
};

fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(lo..hi, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

proptest! {
    #[test]
    fn roundtrip_within_half_scale(x in matrix(5, 7, -9.0, 9.0), bits in 2u32..=16) {
        let cfg = QuantConfig::int(bits);
        for axis in [VectorAxis::Rows, VectorAxis::Cols] {
            let q = quantize_along(x.view(), &cfg, axis).unwrap();
            prop_assert!(max_inlier_error_in_scales(x.view(), &q) <= 0.5 + 1e-9);
            let limit = (1i32 << (bits - 1)) - 1;
            prop_assert!(q.codes.iter().all(|c| c.abs() <= limit));
            let back = q.dequantize();
            for &((r, c), v) in &q.outliers {
                prop_assert!(v.abs() > cfg.outlier_threshold);
                prop_assert_eq!(back[[r, c]], x[[r, c]]);
            }
        }
    }

    /// On a dyadic grid every inlier lands exactly on a code, so the split
    /// into inlier and outlier products must reproduce the full product
    /// bit for bit.
    #[test]
    fn decomposition_identity_without_rounding(
        xc in proptest::collection::vec(-127i32..=127, 4 * 6),
        wc in proptest::collection::vec(-127i32..=127, 6 * 3),
        xo in proptest::collection::vec((0usize..24, 7i32..40), 0..4),
        wo in proptest::collection::vec((0usize..18, 7i32..40), 0..4),
    ) {
        let step = 2f64.powi(-5);
        let mut x = Array2::from_shape_fn((4, 6), |(i, j)| xc[i * 6 + j] as f64 * step);
        let mut w = Array2::from_shape_fn((6, 3), |(i, j)| wc[i * 3 + j] as f64 * step);
        // Pin each quantization vector's absmax to 127 steps.
        for i in 0..4 { x[[i, 0]] = 127.0 * step; }
        for j in 0..3 { w[[0, j]] = -127.0 * step; }
        for (k, v) in xo { x[[k / 6, 1 + k % 5]] = v as f64; }
        for (k, v) in wo { w[[1 + (k / 3) % 5, k % 3]] = -(v as f64); }
        let cfg = QuantConfig::int(8);
        let qx = quantize_along(x.view(), &cfg, VectorAxis::Rows).unwrap();
        let qw = quantize_along(w.view(), &cfg, VectorAxis::Cols).unwrap();
        prop_assert_eq!(decomposed_product(&qx, &qw), x.dot(&w));
    }
}

fn fixed() -> (Array2<f64>, Array2<f64>) {
    let x = Array2::from_shape_fn((4, 5), |(i, j)| ((i * 5 + j) as f64 * 0.71).sin() * 2.0);
    let w = Array2::from_shape_fn((5, 3), |(i, j)| ((i * 3 + j) as f64 * 1.3).cos());
    (x, w)
}

fn max_rel(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
}

#[test]
fn sixteen_bit_noiseless_close_to_exact() {
    let (x, w) = fixed();
    let y = noisy_matmul(
        x.view(),
        w.view(),
        &QuantConfig::int(16),
        &NoiseConfig::default(),
        0,
    )
    .unwrap();
    assert!(max_rel(&y, &x.dot(&w)) < 1e-3);
    let off = noisy_matmul(
        x.view(),
        w.view(),
        &QuantConfig::off(),
        &NoiseConfig::default(),
        0,
    )
    .unwrap();
    assert_eq!(off, x.dot(&w));
}

#[test]
fn same_seed_same_output() {
    let (x, w) = fixed();
    let n = NoiseConfig::with_sigma(0.1);
    let q = QuantConfig::default();
    let a = noisy_matmul(x.view(), w.view(), &q, &n, 42).unwrap();
    assert_eq!(a, noisy_matmul(x.view(), w.view(), &q, &n, 42).unwrap());
    assert_ne!(a, noisy_matmul(x.view(), w.view(), &q, &n, 43).unwrap());
}

/// ε has zero mean, so the trial mean converges on the clean product with
/// error shrinking like 1/√trials.
#[test]
fn noise_is_unbiased() {
    let (x, w) = fixed();
    let exact = x.dot(&w);
    let n = NoiseConfig::with_sigma(0.1);
    let rms_error = |trials: u64, offset: u64| {
        let mut sum = Array2::<f64>::zeros(exact.raw_dim());
        for t in 0..trials {
            sum += &noisy_matmul(x.view(), w.view(), &QuantConfig::off(), &n, offset + t).unwrap();
        }
        let mean = sum / trials as f64;
        ((&mean - &exact).mapv(|v| v * v).sum() / exact.len() as f64).sqrt()
    };
    let coarse = rms_error(100, 0);
    let fine = rms_error(6400, 1_000_000);
    let ratio = coarse / fine;
    // Expected ratio is √64 = 8.
    assert!(
        (4.0..16.0).contains(&ratio),
        "coarse {coarse} fine {fine} ratio {ratio}"
    );
}
