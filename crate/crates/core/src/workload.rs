// SPDX-License-Identifier: Apache-2.0

//! Transformer workload shapes and operation counts.
//!
//! Counts are in operations (1 MAC = 2 ops) and use `u128` so that any field
//! up to 10⁶ cannot overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a decoder-only transformer as seen by the matrix engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerDims {
    /// Tokens processed in parallel (T).
    pub tokens: u64,
    /// Decoder layers (L).
    pub layers: u64,
    /// Attention heads (H).
    pub heads: u64,
    /// Per-head key/query/value width (S).
    pub head_dim: u64,
    /// Embedding width (N).
    pub embed_dim: u64,
    /// Feed-forward hidden width (M).
    pub ff_dim: u64,
}

impl TransformerDims {
    /// GPT-3 175B at its full 2048-token context.
    pub const fn gpt3() -> Self {
        Self {
            tokens: 2048,
            layers: 96,
            heads: 96,
            head_dim: 128,
            embed_dim: 12288,
            ff_dim: 49152,
        }
    }

    pub const fn unit() -> Self {
        Self {
            tokens: 1,
            layers: 1,
            heads: 1,
            head_dim: 1,
            embed_dim: 1,
            ff_dim: 1,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "gpt3" => Some(Self::gpt3()),
            "unit" => Some(Self::unit()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tokens", self.tokens),
            ("layers", self.layers),
            ("heads", self.heads),
            ("head_dim", self.head_dim),
            ("embed_dim", self.embed_dim),
            ("ff_dim", self.ff_dim),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::InvalidDims(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Concatenated head width S·H.
    pub fn attention_width(&self) -> u64 {
        self.head_dim * self.heads
    }

    /// Whether S·H = N, the condition under which the simplified closed forms apply.
    pub fn heads_fill_embedding(&self) -> bool {
        self.attention_width() == self.embed_dim
    }

    /// Number of weights in all projection matrices (biases not counted).
    pub fn weight_count(&self) -> u128 {
        let (l, sh, n, m) = (
            self.layers as u128,
            self.attention_width() as u128,
            self.embed_dim as u128,
            self.ff_dim as u128,
        );
        l * (3 * sh * n + n * sh + m * n + n * m)
    }
}

/// Role of a weight matrix inside one decoder layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VmmKind {
    QueryKeyValue,
    Output,
    Up,
    Down,
}

impl VmmKind {
    pub const ALL: [VmmKind; 4] = [Self::QueryKeyValue, Self::Output, Self::Up, Self::Down];

    pub fn label(self) -> &'static str {
        match self {
            Self::QueryKeyValue => "w_qkv",
            Self::Output => "w_output",
            Self::Up => "w_up",
            Self::Down => "w_down",
        }
    }
}

/// A weight matrix `out_dim × in_dim` applied to `batch` input vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VmmShape {
    pub out_dim: u64,
    pub in_dim: u64,
    pub batch: u64,
}

impl VmmShape {
    pub fn new(out_dim: u64, in_dim: u64, batch: u64) -> Result<Self> {
        if out_dim == 0 || in_dim == 0 || batch == 0 {
            return Err(Error::InvalidDims(format!(
                "vmm shape {out_dim}x{in_dim} batch {batch} has a zero extent"
            )));
        }
        Ok(Self {
            out_dim,
            in_dim,
            batch,
        })
    }

    pub fn macs(&self) -> u128 {
        self.out_dim as u128 * self.in_dim as u128 * self.batch as u128
    }

    /// Independent dot products, i.e. `batch × out_dim`.
    pub fn parallel_tasks(&self) -> u128 {
        self.batch as u128 * self.out_dim as u128
    }
}

/// The four weight products of one layer; the model repeats it `layers` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorkloadPlan {
    pub vmms: Vec<(VmmKind, VmmShape)>,
    pub layers: u64,
}

impl WorkloadPlan {
    pub fn shape(&self, kind: VmmKind) -> VmmShape {
        self.vmms
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, s)| *s)
            .expect("plan holds all four kinds")
    }

    /// Every scheduled product over all layers, in execution order.
    pub fn iter_all(&self) -> impl Iterator<Item = (u64, VmmKind, VmmShape)> + '_ {
        (0..self.layers).flat_map(move |layer| self.vmms.iter().map(move |(k, s)| (layer, *k, *s)))
    }

    /// Σ 2·out·in·batch over every scheduled product.
    pub fn enumerated_ops(&self) -> u128 {
        self.iter_all().map(|(_, _, s)| 2 * s.macs()).sum()
    }
}

pub fn workload_plan(dims: &TransformerDims) -> Result<WorkloadPlan> {
    dims.validate()?;
    let (t, sh, n, m) = (
        dims.tokens,
        dims.attention_width(),
        dims.embed_dim,
        dims.ff_dim,
    );
    Ok(WorkloadPlan {
        vmms: vec![
            (VmmKind::QueryKeyValue, VmmShape::new(3 * sh, n, t)?),
            (VmmKind::Output, VmmShape::new(n, sh, t)?),
            (VmmKind::Up, VmmShape::new(m, n, t)?),
            (VmmKind::Down, VmmShape::new(n, m, t)?),
        ],
        layers: dims.layers,
    })
}

/// Operations in the weight products of the whole model.
///
/// Uses the general four-term form, which reduces to 2·(4N² + 2MN)·T·L when
/// S·H = N. See [`total_mac_ops_closed_form`].
pub fn total_mac_ops(dims: &TransformerDims) -> Result<u128> {
    dims.validate()?;
    let (t, l, sh, n, m) = (
        dims.tokens as u128,
        dims.layers as u128,
        dims.attention_width() as u128,
        dims.embed_dim as u128,
        dims.ff_dim as u128,
    );
    Ok(2 * ((3 * sh * n + n * sh) + (m * n + n * m)) * t * l)
}

/// 2·(4N² + 2MN)·T·L; requires S·H = N.
pub fn total_mac_ops_closed_form(dims: &TransformerDims) -> Result<u128> {
    dims.validate()?;
    if !dims.heads_fill_embedding() {
        return Err(Error::InvalidDims(format!(
            "closed form needs head_dim*heads == embed_dim, got {}*{} != {}",
            dims.head_dim, dims.heads, dims.embed_dim
        )));
    }
    let (t, l, n, m) = (
        dims.tokens as u128,
        dims.layers as u128,
        dims.embed_dim as u128,
        dims.ff_dim as u128,
    );
    Ok(2 * (4 * n * n + 2 * m * n) * t * l)
}

/// Which query columns the attention-pattern products are counted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionConvention {
    /// Full T×T pattern: every token attends to every token.
    #[default]
    Full,
    /// Only the newest token's query column (incremental decoding).
    LastToken,
}

/// Operations in KᵀQ and V·(KᵀQ), summed over heads and layers.
///
/// These are never scheduled on the pixel array; they are reported for
/// information only.
pub fn attention_pattern_ops(
    dims: &TransformerDims,
    convention: AttentionConvention,
) -> Result<u128> {
    dims.validate()?;
    let (t, s, h, l) = (
        dims.tokens as u128,
        dims.head_dim as u128,
        dims.heads as u128,
        dims.layers as u128,
    );
    let queries = match convention {
        AttentionConvention::Full => t,
        AttentionConvention::LastToken => 1,
    };
    // KᵀQ: T×queries entries of S MACs; V·(KᵀQ): S×queries entries of T MACs.
    let macs_per_head = t * queries * s + s * queries * t;
    Ok(2 * macs_per_head * h * l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_attention_macs(dims: &TransformerDims, queries: u64) -> u128 {
        let mut macs = 0u128;
        for _layer in 0..dims.layers {
            for _head in 0..dims.heads {
                // KᵀQ[i][j] = Σ_k K[k][i]·Q[k][j]
                for _i in 0..dims.tokens {
                    for _j in 0..queries {
                        for _k in 0..dims.head_dim {
                            macs += 1;
                        }
                    }
                }
                // (V·P)[a][j] = Σ_i V[a][i]·P[i][j]
                for _a in 0..dims.head_dim {
                    for _j in 0..queries {
                        for _i in 0..dims.tokens {
                            macs += 1;
                        }
                    }
                }
            }
        }
        macs
    }

    #[test]
    fn gpt3_task_count() {
        let ops = total_mac_ops(&TransformerDims::gpt3()).unwrap();
        assert_eq!(ops, 712_483_534_798_848);
        assert_eq!(
            ops,
            total_mac_ops_closed_form(&TransformerDims::gpt3()).unwrap()
        );
    }

    #[test]
    fn unit_dims_count_twelve() {
        assert_eq!(total_mac_ops(&TransformerDims::unit()).unwrap(), 12);
    }

    #[test]
    fn small_dims_match_enumeration() {
        let dims = TransformerDims {
            tokens: 2,
            layers: 3,
            heads: 2,
            head_dim: 2,
            embed_dim: 4,
            ff_dim: 8,
        };
        let plan = workload_plan(&dims).unwrap();
        assert_eq!(plan.enumerated_ops(), 1536);
        assert_eq!(total_mac_ops(&dims).unwrap(), 1536);
    }

    #[test]
    fn closed_form_rejects_mismatched_heads() {
        let dims = TransformerDims {
            heads: 3,
            ..TransformerDims::unit()
        };
        assert!(total_mac_ops_closed_form(&dims).is_err());
        assert!(total_mac_ops(&dims).is_ok());
    }

    #[test]
    fn zero_field_rejected() {
        let dims = TransformerDims {
            layers: 0,
            ..TransformerDims::gpt3()
        };
        assert!(matches!(total_mac_ops(&dims), Err(Error::InvalidDims(_))));
    }

    #[test]
    fn gpt3_plan_shapes() {
        let plan = workload_plan(&TransformerDims::gpt3()).unwrap();
        assert_eq!(
            plan.shape(VmmKind::QueryKeyValue),
            VmmShape::new(36864, 12288, 2048).unwrap()
        );
        assert_eq!(
            plan.shape(VmmKind::Output),
            VmmShape::new(12288, 12288, 2048).unwrap()
        );
        assert_eq!(
            plan.shape(VmmKind::Up),
            VmmShape::new(49152, 12288, 2048).unwrap()
        );
        assert_eq!(
            plan.shape(VmmKind::Down),
            VmmShape::new(12288, 49152, 2048).unwrap()
        );
        assert_eq!(
            plan.shape(VmmKind::QueryKeyValue).parallel_tasks(),
            2048 * 128 * 3 * 96
        );
        assert_eq!(plan.iter_all().count(), 4 * 96);
    }

    #[test]
    fn unit_plan_is_all_ones() {
        let plan = workload_plan(&TransformerDims::unit()).unwrap();
        for (kind, s) in &plan.vmms {
            let expected_out = if *kind == VmmKind::QueryKeyValue {
                3
            } else {
                1
            };
            assert_eq!(
                (s.out_dim, s.in_dim, s.batch),
                (expected_out, 1, 1),
                "{kind:?}"
            );
        }
    }

    #[test]
    fn attention_ops_match_enumeration() {
        let dims = TransformerDims {
            tokens: 2,
            layers: 1,
            heads: 1,
            head_dim: 1,
            embed_dim: 1,
            ff_dim: 1,
        };
        assert_eq!(
            attention_pattern_ops(&dims, AttentionConvention::Full).unwrap(),
            2 * brute_attention_macs(&dims, dims.tokens)
        );
        assert_eq!(
            attention_pattern_ops(&dims, AttentionConvention::Full).unwrap(),
            16
        );

        let dims = TransformerDims {
            tokens: 5,
            layers: 2,
            heads: 3,
            head_dim: 4,
            embed_dim: 12,
            ff_dim: 7,
        };
        for (conv, q) in [
            (AttentionConvention::Full, 5),
            (AttentionConvention::LastToken, 1),
        ] {
            assert_eq!(
                attention_pattern_ops(&dims, conv).unwrap(),
                2 * brute_attention_macs(&dims, q)
            );
        }
    }

    #[test]
    fn attention_ops_single_token() {
        let dims = TransformerDims {
            tokens: 1,
            layers: 3,
            heads: 4,
            head_dim: 5,
            embed_dim: 20,
            ff_dim: 2,
        };
        let expected = 2 * (5 + 5) * 4 * 3;
        for conv in [AttentionConvention::Full, AttentionConvention::LastToken] {
            assert_eq!(attention_pattern_ops(&dims, conv).unwrap(), expected);
        }
    }

    #[test]
    fn gpt3_attention_pattern_is_about_twenty_tera_ops() {
        let full =
            attention_pattern_ops(&TransformerDims::gpt3(), AttentionConvention::Full).unwrap();
        assert_eq!(full, 4 * 2048u128 * 2048 * 128 * 96 * 96);
        let tera = full as f64 / 1e12;
        assert!((15.0..25.0).contains(&tera), "{tera}");
        let total = total_mac_ops(&TransformerDims::gpt3()).unwrap() + full;
        assert!(((total as f64 / 1e12) - 733.0).abs() < 2.0);
    }

    #[test]
    fn weight_count_gpt3() {
        let w = TransformerDims::gpt3().weight_count();
        let gb = w as f64 / 1e9;
        assert!((gb - 175.0).abs() / 175.0 < 0.02, "{gb}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dims_strategy() -> impl Strategy<Value = TransformerDims> {
            (1u64..64, 1u64..8, 1u64..8, 1u64..16, 1u64..256).prop_map(|(t, l, h, s, m)| {
                TransformerDims {
                    tokens: t,
                    layers: l,
                    heads: h,
                    head_dim: s,
                    embed_dim: h * s,
                    ff_dim: m,
                }
            })
        }

        proptest! {
            #[test]
            fn closed_form_equals_plan_enumeration(d in dims_strategy()) {
                let plan = workload_plan(&d).unwrap();
                prop_assert_eq!(total_mac_ops_closed_form(&d).unwrap(), plan.enumerated_ops());
            }

            #[test]
            fn linear_in_tokens_and_layers(d in dims_strategy()) {
                let base = total_mac_ops(&d).unwrap();
                let t2 = TransformerDims { tokens: d.tokens * 2, ..d };
                let l2 = TransformerDims { layers: d.layers * 2, ..d };
                prop_assert_eq!(total_mac_ops(&t2).unwrap(), 2 * base);
                prop_assert_eq!(total_mac_ops(&l2).unwrap(), 2 * base);
            }
        }
    }
}
