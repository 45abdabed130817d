// SPDX-License-Identifier: Apache-2.0

//! Pre-norm transformer encoder classifier with every matrix product routed
//! through a [`MatmulPolicy`].

use std::cell::Cell;

use ndarray::{Array2, Axis};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{QuantError, Result};
use crate::noise::{perturb, NoiseConfig, NoiseMode};
use crate::quantize::{fake_quantize, QuantConfig, VectorAxis};
use crate::tape::{Tape, Var};
use oen_core::hardware::HardwareConfig;
use oen_core::mmm_engine::{execute, ExecuteOptions, Fidelity};
use oen_core::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub embed_dim: usize,
    pub heads: usize,
    pub layers: usize,
    /// Feed-forward width as a multiple of embed_dim.
    pub ff_mult: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            heads: 2,
            layers: 2,
            ff_mult: 4,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.heads == 0 || self.layers == 0 || self.ff_mult == 0 {
            return Err(QuantError::Config("model dimensions must be >= 1".into()));
        }
        if !self.embed_dim.is_multiple_of(self.heads) {
            return Err(QuantError::Config(format!(
                "embed_dim {} not divisible by {} heads",
                self.embed_dim, self.heads
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub spec: ModelSpec,
    pub input_dim: usize,
    pub seq_len: usize,
    pub classes: usize,
    pub names: Vec<String>,
    pub params: Vec<Array2<f64>>,
}

const PER_LAYER: usize = 12;
const HEAD_SITE: u64 = 1 << 20;

impl ToyModel {
    pub fn init(
        spec: ModelSpec,
        input_dim: usize,
        seq_len: usize,
        classes: usize,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        let d = spec.embed_dim;
        let f = d * spec.ff_mult;
        let mut names = Vec::new();
        let mut params = Vec::new();
        let mut rng = stream_rng(seed, u64::MAX - 1, 0);
        let mut add = |name: String, shape: (usize, usize), init: Init| {
            let m = match init {
                Init::Zeros => Array2::zeros(shape),
                Init::Ones => Array2::ones(shape),
                Init::Normal(std) => {
                    let n = Normal::new(0.0, std).expect("positive std");
                    Array2::from_shape_simple_fn(shape, || n.sample(&mut rng))
                }
            };
            names.push(name);
            params.push(m);
        };
        let fan = |n: usize| Init::Normal(1.0 / (n as f64).sqrt());
        add("embed.w".into(), (input_dim, d), fan(input_dim));
        add("embed.b".into(), (1, d), Init::Zeros);
        add("pos".into(), (seq_len, d), Init::Normal(0.02));
        for l in 0..spec.layers {
            add(format!("l{l}.ln1.g"), (1, d), Init::Ones);
            add(format!("l{l}.ln1.b"), (1, d), Init::Zeros);
            for w in ["wq", "wk", "wv", "wo"] {
                add(format!("l{l}.{w}"), (d, d), fan(d));
            }
            add(format!("l{l}.ln2.g"), (1, d), Init::Ones);
            add(format!("l{l}.ln2.b"), (1, d), Init::Zeros);
            add(format!("l{l}.w1"), (d, f), fan(d));
            add(format!("l{l}.b1"), (1, f), Init::Zeros);
            add(format!("l{l}.w2"), (f, d), fan(f));
            add(format!("l{l}.b2"), (1, d), Init::Zeros);
        }
        add("lnf.g".into(), (1, d), Init::Ones);
        add("lnf.b".into(), (1, d), Init::Zeros);
        add("head.w".into(), (d, classes), fan(d));
        add("head.b".into(), (1, classes), Init::Zeros);
        Ok(Self {
            spec,
            input_dim,
            seq_len,
            classes,
            names,
            params,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    /// Builds the graph for one sequence. Returns the parameter leaves and
    /// the 1×classes logits.
    pub fn forward(
        &self,
        tape: &mut Tape,
        x: &Array2<f64>,
        ctx: &PolicyCtx,
    ) -> Result<(Vec<Var>, Var)> {
        if x.dim() != (self.seq_len, self.input_dim) {
            return Err(QuantError::Shape(format!(
                "sample is {:?}, model expects ({}, {})",
                x.dim(),
                self.seq_len,
                self.input_dim
            )));
        }
        let p: Vec<Var> = self.params.iter().map(|m| tape.leaf(m.clone())).collect();
        let d = self.spec.embed_dim;
        let hd = d / self.spec.heads;
        let xin = tape.leaf(x.clone());

        let e = ctx.product(tape, xin, p[0], 0)?;
        let e = tape.add_row(e, p[1]);
        let mut h = tape.add(e, p[2]);

        for l in 0..self.spec.layers {
            let b = 3 + l * PER_LAYER;
            let site = 1 + (l as u64) * 64;
            let a = tape.layer_norm(h);
            let a = tape.mul_row(a, p[b]);
            let a = tape.add_row(a, p[b + 1]);
            let q = ctx.product(tape, a, p[b + 2], site)?;
            let k = ctx.product(tape, a, p[b + 3], site + 1)?;
            let v = ctx.product(tape, a, p[b + 4], site + 2)?;
            let mut heads = Vec::with_capacity(self.spec.heads);
            for hh in 0..self.spec.heads {
                let (c0, c1) = (hh * hd, (hh + 1) * hd);
                let qh = tape.slice_cols(q, c0, c1);
                let kh = tape.slice_cols(k, c0, c1);
                let vh = tape.slice_cols(v, c0, c1);
                let kt = tape.transpose(kh);
                let s = ctx.product(tape, qh, kt, site + 4 + 2 * hh as u64)?;
                let s = tape.scale(s, 1.0 / (hd as f64).sqrt());
                let a = tape.softmax_rows(s);
                heads.push(ctx.product(tape, a, vh, site + 5 + 2 * hh as u64)?);
            }
            let o = tape.concat_cols(&heads);
            let o = ctx.product(tape, o, p[b + 5], site + 3)?;
            h = tape.add(h, o);

            let a = tape.layer_norm(h);
            let a = tape.mul_row(a, p[b + 6]);
            let a = tape.add_row(a, p[b + 7]);
            let f = ctx.product(tape, a, p[b + 8], site + 60)?;
            let f = tape.add_row(f, p[b + 9]);
            let f = tape.gelu(f);
            let f = ctx.product(tape, f, p[b + 10], site + 61)?;
            let f = tape.add_row(f, p[b + 11]);
            h = tape.add(h, f);
        }

        let n = 3 + self.spec.layers * PER_LAYER;
        let a = tape.layer_norm(h);
        let a = tape.mul_row(a, p[n]);
        let a = tape.add_row(a, p[n + 1]);
        let pooled = tape.mean_rows(a);
        let logits = ctx.product(tape, pooled, p[n + 2], HEAD_SITE)?;
        let logits = tape.add_row(logits, p[n + 3]);
        Ok((p, logits))
    }

    pub fn predict(&self, x: &Array2<f64>, ctx: &PolicyCtx) -> Result<usize> {
        let mut tape = Tape::new();
        let (_, logits) = self.forward(&mut tape, x, ctx)?;
        let row = tape.value(logits).index_axis(Axis(0), 0).to_owned();
        Ok(argmax(row.as_slice().expect("contiguous")))
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

enum Init {
    Zeros,
    Ones,
    Normal(f64),
}

/// How matrix products are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Exact,
    /// Multiplicative noise, then quantization, on both operands.
    Noisy {
        quant: QuantConfig,
        noise: NoiseConfig,
    },
    /// Each product runs through the array simulator after absmax scaling
    /// of both operands into [−1, 1].
    Physics {
        config: Box<HardwareConfig>,
        fidelity: Fidelity,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatmulPolicy {
    pub backend: Backend,
    pub seed: u64,
    pub trial: u64,
}

impl MatmulPolicy {
    pub fn exact() -> Self {
        Self {
            backend: Backend::Exact,
            seed: 0,
            trial: 0,
        }
    }

    pub fn noisy(quant: QuantConfig, noise: NoiseConfig, seed: u64, trial: u64) -> Self {
        Self {
            backend: Backend::Noisy { quant, noise },
            seed,
            trial,
        }
    }

    /// Context for one sample's forward pass.
    pub fn ctx(&self, sample: u64) -> PolicyCtx<'_> {
        PolicyCtx {
            policy: self,
            sample,
            counter: Cell::new(0),
        }
    }
}

pub struct PolicyCtx<'a> {
    policy: &'a MatmulPolicy,
    sample: u64,
    counter: Cell<u64>,
}

impl PolicyCtx<'_> {
    fn stream_key(&self, site: u64, operand: u64, mode: NoiseMode) -> u64 {
        match mode {
            NoiseMode::Redraw => (self.sample << 24) | (self.counter.get() << 1) | operand,
            NoiseMode::FrozenPerDevice => (1 << 63) | (site << 1) | operand,
        }
    }

    /// `a·b` under the policy, recorded on the tape with straight-through
    /// gradients.
    pub fn product(&self, tape: &mut Tape, a: Var, b: Var, site: u64) -> Result<Var> {
        let pol = self.policy;
        let out = match &pol.backend {
            Backend::Exact => Ok(tape.matmul(a, b)),
            Backend::Noisy { quant, noise } => {
                let (x, w) = (tape.value(a), tape.value(b));
                let xs = if noise.apply_to.activations() {
                    let key = self.stream_key(site, 0, noise.mode);
                    perturb(
                        x.view(),
                        noise.sigma,
                        &mut stream_rng(pol.seed, key, pol.trial),
                    )
                } else {
                    x.clone()
                };
                let ws = if noise.apply_to.weights() {
                    let key = self.stream_key(site, 1, noise.mode);
                    perturb(
                        w.view(),
                        noise.sigma,
                        &mut stream_rng(pol.seed, key, pol.trial),
                    )
                } else {
                    w.clone()
                };
                let xq = fake_quantize(xs.view(), quant, VectorAxis::Rows)?;
                let wq = fake_quantize(ws.view(), quant, VectorAxis::Cols)?;
                let y = xq.dot(&wq);
                Ok(tape.matmul_with(a, b, xq, wq, y))
            }
            Backend::Physics { config, fidelity } => {
                let (x, w) = (tape.value(a).clone(), tape.value(b).clone());
                let sx = absmax(&x);
                let sw = absmax(&w);
                let xt = (x.t().to_owned() / sx).mapv(|v| v.clamp(-1.0, 1.0));
                let wt = (w.t().to_owned() / sw).mapv(|v| v.clamp(-1.0, 1.0));
                let opts = ExecuteOptions {
                    trial: self.stream_key(site, 0, NoiseMode::Redraw) ^ pol.trial,
                    ..ExecuteOptions::default()
                };
                let ex = execute(xt.view(), wt.view(), config, *fidelity, pol.seed, &opts)?;
                let y = ex.y.t().to_owned() * (sx * sw);
                Ok(tape.matmul_with(a, b, x, w, y))
            }
        };
        self.counter.set(self.counter.get() + 1);
        out
    }
}

fn absmax(m: &Array2<f64>) -> f64 {
    let a = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if a > 0.0 {
        a
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::ApplyTo;

    fn model() -> ToyModel {
        ToyModel::init(ModelSpec::default(), 8, 8, 4, 1).unwrap()
    }

    fn input() -> Array2<f64> {
        Array2::from_shape_fn((8, 8), |(i, j)| ((i * 8 + j) as f64 * 0.37).sin())
    }

    #[test]
    fn shapes_and_names() {
        let m = model();
        assert_eq!(m.names.len(), m.params.len());
        assert_eq!(m.names.len(), 3 + 2 * PER_LAYER + 4);
        let mut tape = Tape::new();
        let (_, logits) = m
            .forward(&mut tape, &input(), &MatmulPolicy::exact().ctx(0))
            .unwrap();
        assert_eq!(tape.value(logits).dim(), (1, 4));
    }

    #[test]
    fn zero_noise_quant_off_equals_exact() {
        let m = model();
        let exact = MatmulPolicy::exact();
        let noisy = MatmulPolicy::noisy(QuantConfig::off(), NoiseConfig::default(), 5, 0);
        let mut t1 = Tape::new();
        let (_, a) = m.forward(&mut t1, &input(), &exact.ctx(0)).unwrap();
        let mut t2 = Tape::new();
        let (_, b) = m.forward(&mut t2, &input(), &noisy.ctx(0)).unwrap();
        assert_eq!(t1.value(a), t2.value(b));
    }

    #[test]
    fn frozen_noise_repeats_across_samples() {
        let m = model();
        let frozen = NoiseConfig {
            sigma: 0.05,
            apply_to: ApplyTo::Weights,
            mode: NoiseMode::FrozenPerDevice,
        };
        let pol = MatmulPolicy::noisy(QuantConfig::off(), frozen, 5, 0);
        let run = |s: u64| {
            let mut t = Tape::new();
            let (_, l) = m.forward(&mut t, &input(), &pol.ctx(s)).unwrap();
            t.value(l).clone()
        };
        assert_eq!(run(0), run(7));
        let redraw = MatmulPolicy::noisy(
            QuantConfig::off(),
            NoiseConfig {
                mode: NoiseMode::Redraw,
                ..frozen
            },
            5,
            0,
        );
        let mut t1 = Tape::new();
        let (_, a) = m.forward(&mut t1, &input(), &redraw.ctx(0)).unwrap();
        let mut t2 = Tape::new();
        let (_, b) = m.forward(&mut t2, &input(), &redraw.ctx(7)).unwrap();
        assert_ne!(t1.value(a), t2.value(b));
    }

    #[test]
    fn physics_backend_tracks_exact() {
        let m = model();
        let mut cfg = HardwareConfig::table1();
        cfg.geometry.rows = 8;
        cfg.geometry.cols = 8;
        let pol = MatmulPolicy {
            backend: Backend::Physics {
                config: Box::new(cfg),
                fidelity: Fidelity::Quantized,
            },
            seed: 1,
            trial: 0,
        };
        let mut t1 = Tape::new();
        let (_, a) = m
            .forward(&mut t1, &input(), &MatmulPolicy::exact().ctx(0))
            .unwrap();
        let mut t2 = Tape::new();
        let (_, b) = m.forward(&mut t2, &input(), &pol.ctx(0)).unwrap();
        let d = (t1.value(a) - t2.value(b))
            .iter()
            .fold(0.0f64, |x, v| x.max(v.abs()));
        assert!(d < 1.0, "{d}");
    }

    #[test]
    fn rejects_wrong_input() {
        let m = model();
        let mut t = Tape::new();
        assert!(m
            .forward(
                &mut t,
                &Array2::zeros((3, 8)),
                &MatmulPolicy::exact().ctx(0)
            )
            .is_err());
        assert!(ToyModel::init(
            ModelSpec {
                heads: 3,
                ..Default::default()
            },
            8,
            8,
            4,
            0
        )
        .is_err());
    }
}
