// SPDX-License-Identifier: Apache-2.0

//! Mini-batch SGD with momentum. Per-sample gradients run in parallel and
//! are reduced in sample order, so training is reproducible for any thread
//! count.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Sample};
use crate::error::{QuantError, Result};
use crate::model::{MatmulPolicy, ModelSpec, ToyModel};
use crate::noise::NoiseConfig;
use crate::quantize::QuantConfig;
use crate::tape::Tape;
use oen_core::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            clip_norm: 5.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(QuantError::Config("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0)
            || !(0.0..1.0).contains(&self.momentum)
            || !(self.clip_norm >= 0.0)
        {
            return Err(QuantError::Config(
                "learning_rate must be > 0, momentum in [0, 1), clip_norm >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Test accuracy below which the full-precision baseline is rejected.
pub const BASELINE_BAR: f64 = 0.95;

/// Mean loss and summed gradients over `batch` under `policy`.
fn batch_gradients(
    model: &ToyModel,
    batch: &[(u64, &Sample)],
    policy: &MatmulPolicy,
) -> Result<(f64, Vec<Array2<f64>>)> {
    let per_sample: Vec<Result<(f64, Vec<Array2<f64>>)>> = batch
        .par_iter()
        .map(|(id, s)| {
            let mut tape = Tape::new();
            let ctx = policy.ctx(*id);
            let (params, logits) = model.forward(&mut tape, &s.x, &ctx)?;
            let loss = tape.cross_entropy(logits, s.label);
            let l = tape.value(loss)[[0, 0]];
            let mut g = tape.backward(loss);
            let grads = params
                .iter()
                .zip(&model.params)
                .map(|(v, p)| {
                    g[v.index()]
                        .take()
                        .unwrap_or_else(|| Array2::zeros(p.raw_dim()))
                })
                .collect();
            Ok((l, grads))
        })
        .collect();
    let mut total = 0.0;
    let mut sum: Vec<Array2<f64>> = model
        .params
        .iter()
        .map(|p| Array2::zeros(p.raw_dim()))
        .collect();
    for r in per_sample {
        let (l, g) = r?;
        total += l;
        for (s, gi) in sum.iter_mut().zip(g) {
            *s += &gi;
        }
    }
    Ok((total / batch.len() as f64, sum))
}

/// Trains `model` in place under `policy`. `seed` drives the shuffling;
/// sample ids for the policy are unique across epochs so redrawn noise
/// differs on every visit.
pub fn train_with_policy(
    model: &mut ToyModel,
    samples: &[Sample],
    cfg: &TrainConfig,
    policy: &MatmulPolicy,
    seed: u64,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut velocity: Vec<Array2<f64>> = model
        .params
        .iter()
        .map(|p| Array2::zeros(p.raw_dim()))
        .collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = stream_rng(seed, u64::MAX - 2, 0);
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(u64, &Sample)> = chunk
                .iter()
                .map(|&i| ((epoch * samples.len() + i) as u64, &samples[i]))
                .collect();
            let (loss, mut grads) = batch_gradients(model, &batch, policy)?;
            epoch_loss += loss * chunk.len() as f64;
            let n = chunk.len() as f64;
            for g in &mut grads {
                *g /= n;
            }
            if cfg.clip_norm > 0.0 {
                let norm = grads
                    .iter()
                    .flat_map(|g| g.iter())
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt();
                if norm > cfg.clip_norm {
                    let k = cfg.clip_norm / norm;
                    grads.iter_mut().for_each(|g| *g *= k);
                }
            }
            for ((p, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grads) {
                *v *= cfg.momentum;
                *v += g;
                p.scaled_add(-cfg.learning_rate, v);
            }
        }
        let epoch_loss = epoch_loss / samples.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(QuantError::NonFinite(epoch, 0));
        }
        losses.push(epoch_loss);
    }
    Ok(losses)
}

/// Fraction of `samples` classified correctly under `policy`.
pub fn accuracy(model: &ToyModel, samples: &[Sample], policy: &MatmulPolicy) -> Result<f64> {
    if samples.is_empty() {
        return Err(QuantError::Config("accuracy over an empty set".into()));
    }
    let hits: Vec<Result<bool>> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| Ok(model.predict(&s.x, &policy.ctx(i as u64))? == s.label))
        .collect();
    let mut correct = 0usize;
    for h in hits {
        correct += h? as usize;
    }
    Ok(correct as f64 / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedBaseline {
    pub model: ToyModel,
    pub losses: Vec<f64>,
    pub test_accuracy: f64,
}

/// Full-precision baseline. Fails with `NotConverged` if test accuracy
/// stays under [`BASELINE_BAR`].
pub fn train_toy(
    data: &Dataset,
    spec: ModelSpec,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainedBaseline> {
    let d = &data.spec;
    let mut model = ToyModel::init(spec, d.input_dim, d.seq_len, d.classes, seed)?;
    let losses = train_with_policy(&mut model, &data.train, cfg, &MatmulPolicy::exact(), seed)?;
    let test_accuracy = accuracy(&model, &data.test, &MatmulPolicy::exact())?;
    if test_accuracy < BASELINE_BAR {
        return Err(QuantError::NotConverged {
            accuracy: test_accuracy,
            bar: BASELINE_BAR,
            epochs: cfg.epochs,
        });
    }
    Ok(TrainedBaseline {
        model,
        losses,
        test_accuracy,
    })
}

/// Quantization- and noise-aware fine-tuning: forward passes see quantized,
/// perturbed operands; gradients pass straight through to the clean
/// parameters. Zero epochs returns the input unchanged.
pub fn qat_finetune(
    model: &ToyModel,
    samples: &[Sample],
    quant: &QuantConfig,
    noise: &NoiseConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<ToyModel> {
    quant.validate()?;
    noise.validate()?;
    let mut tuned = model.clone();
    let policy = MatmulPolicy::noisy(*quant, *noise, seed, 0);
    train_with_policy(&mut tuned, samples, cfg, &policy, seed)?;
    Ok(tuned)
}
