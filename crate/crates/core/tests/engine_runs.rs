// SPDX-License-Identifier: Apache-2.0

use ndarray::Array2;
use oen_core::hardware::HardwareConfig;
use oen_core::mmm_engine::{execute, run_model, ExecuteOptions, Fidelity, RunOptions};
use oen_core::workload::TransformerDims;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn desk_dims() -> TransformerDims {
    TransformerDims {
        tokens: 8,
        layers: 2,
        heads: 4,
        head_dim: 4,
        embed_dim: 16,
        ff_dim: 64,
    }
}

fn desk_config() -> HardwareConfig {
    let mut c = HardwareConfig::table1();
    c.geometry.rows = 4;
    c.geometry.cols = 16;
    c
}

#[test]
fn full_noise_error_within_lsb_and_shot_noise() {
    let run = run_model(
        &desk_dims(),
        &desk_config(),
        Fidelity::FullNoise,
        21,
        &RunOptions::default(),
    )
    .unwrap();
    assert_eq!(run.layers.len(), 2);
    let dac_lsb: f64 = 1.0 / 127.0;
    for layer in &run.layers {
        for v in &layer.vmms {
            let n = v.shape.in_dim as f64;
            // DAC rounding moves each product by at most |x|·δ + |w|·δ + δ².
            let dac_bound = n * (2.0 * dac_lsb / 2.0 + (dac_lsb / 2.0).powi(2));
            let bound = v.lsb.unwrap() + 3.0 * v.sigma_shot_max.unwrap() + dac_bound;
            let err = v.max_abs_error.unwrap();
            assert!(err <= bound, "{:?}: {err} > {bound}", v.kind);
            assert_eq!(v.overflow_count, 0);
        }
    }
    let again = run_model(
        &desk_dims(),
        &desk_config(),
        Fidelity::FullNoise,
        21,
        &RunOptions::default(),
    )
    .unwrap();
    assert_eq!(run.output, again.output);
}

#[test]
fn tile_order_does_not_change_exact_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = Array2::from_shape_simple_fn((24, 10), || rng.random_range(-1.0..=1.0));
    let w = Array2::from_shape_simple_fn((13, 24), || rng.random_range(-1.0..=1.0));
    let mut reference = None;
    for (rows, cols) in [(1, 1), (3, 4), (10, 13), (64, 64)] {
        let mut c = HardwareConfig::table1();
        c.geometry.rows = rows;
        c.geometry.cols = cols;
        let y = execute(
            x.view(),
            w.view(),
            &c,
            Fidelity::Exact,
            0,
            &ExecuteOptions::default(),
        )
        .unwrap()
        .y;
        match &reference {
            None => reference = Some(y),
            Some(r) => assert_eq!(r, &y),
        }
    }
}
