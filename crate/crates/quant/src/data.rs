// SPDX-License-Identifier: Apache-2.0

//! Synthetic token-sequence classification: each class owns a random
//! prototype sequence and samples scatter around it with Gaussian noise.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{QuantError, Result};
use oen_core::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub classes: usize,
    pub input_dim: usize,
    pub seq_len: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// Per-feature noise standard deviation around the class prototype.
    pub cluster_std: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            classes: 4,
            input_dim: 8,
            seq_len: 8,
            train: 512,
            val: 128,
            test: 256,
            cluster_std: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// seq_len × input_dim
    pub x: Array2<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.input_dim == 0 || self.seq_len == 0 {
            return Err(QuantError::Config(
                "classes, input_dim and seq_len must be >= 1".into(),
            ));
        }
        if self.train == 0 || self.test == 0 {
            return Err(QuantError::Config(
                "train and test splits must be non-empty".into(),
            ));
        }
        if !(self.cluster_std >= 0.0) {
            return Err(QuantError::Config("cluster_std must be >= 0".into()));
        }
        Ok(())
    }
}

impl Dataset {
    pub fn generate(spec: &DatasetSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = stream_rng(seed, u64::MAX, 0);
        let shape = (spec.seq_len, spec.input_dim);
        let prototypes: Vec<Array2<f64>> = (0..spec.classes)
            .map(|_| Array2::from_shape_simple_fn(shape, || StandardNormal.sample(&mut rng)))
            .collect();
        let mut draw = |count: usize| -> Vec<Sample> {
            let mut labels: Vec<usize> = (0..count).map(|i| i % spec.classes).collect();
            labels.shuffle(&mut rng);
            labels
                .into_iter()
                .map(|label| {
                    let noise: Array2<f64> = Array2::from_shape_simple_fn(shape, || {
                        spec.cluster_std
                            * <StandardNormal as Distribution<f64>>::sample(
                                &StandardNormal,
                                &mut rng,
                            )
                    });
                    Sample {
                        x: &prototypes[label] + &noise,
                        label,
                    }
                })
                .collect()
        };
        let train = draw(spec.train);
        let val = draw(spec.val);
        let test = draw(spec.test);
        Ok(Self {
            spec: *spec,
            train,
            val,
            test,
        })
    }
}
