// SPDX-License-Identifier: Apache-2.0

//! Accuracy versus noise level, over repeated trials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{QuantError, Result};
use crate::model::{MatmulPolicy, ToyModel};
use crate::noise::NoiseConfig;
use crate::quantize::QuantConfig;
use crate::train::accuracy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sigma: f64,
    pub trial: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSummary {
    pub sigma: f64,
    pub mean_accuracy: f64,
    /// Sample standard deviation over trials; 0 for a single trial.
    pub std_accuracy: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCurve {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SigmaSummary>,
}

pub const CURVE_CSV_HEADER: [&str; 3] = ["sigma", "trial", "accuracy"];

/// Evaluates `model` at each sigma in `sigmas`, `trials` times each. The
/// noise mode and operand selection come from `template`; its sigma is
/// replaced. Records are ordered by sigma, then trial.
pub fn eval_under_noise(
    model: &ToyModel,
    samples: &[Sample],
    quant: &QuantConfig,
    template: &NoiseConfig,
    sigmas: &[f64],
    trials: u64,
    seed: u64,
) -> Result<NoiseCurve> {
    quant.validate()?;
    if trials == 0 || sigmas.is_empty() {
        return Err(QuantError::Config(
            "need at least one sigma and one trial".into(),
        ));
    }
    for &s in sigmas {
        NoiseConfig {
            sigma: s,
            ..*template
        }
        .validate()?;
    }
    let jobs: Vec<(f64, u64)> = sigmas
        .iter()
        .flat_map(|&s| (0..trials).map(move |t| (s, t)))
        .collect();
    let results: Vec<Result<TrialRecord>> = jobs
        .par_iter()
        .map(|&(sigma, trial)| {
            let policy =
                MatmulPolicy::noisy(*quant, NoiseConfig { sigma, ..*template }, seed, trial);
            Ok(TrialRecord {
                sigma,
                trial,
                accuracy: accuracy(model, samples, &policy)?,
            })
        })
        .collect();
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = records
        .chunks(trials as usize)
        .map(|c| {
            let n = c.len() as f64;
            let mean = c.iter().map(|r| r.accuracy).sum::<f64>() / n;
            let var = if c.len() > 1 {
                c.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            SigmaSummary {
                sigma: c[0].sigma,
                mean_accuracy: mean,
                std_accuracy: var.sqrt(),
                trials,
            }
        })
        .collect();
    Ok(NoiseCurve { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, DatasetSpec};
    use crate::model::ModelSpec;

    #[test]
    fn ordering_and_determinism() {
        let data = Dataset::generate(
            &DatasetSpec {
                train: 8,
                val: 4,
                test: 16,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        let spec = ModelSpec {
            embed_dim: 8,
            heads: 1,
            layers: 1,
            ff_mult: 1,
        };
        let m = ToyModel::init(spec, 8, 8, 4, 0).unwrap();
        let run = || {
            eval_under_noise(
                &m,
                &data.test,
                &QuantConfig::int(8),
                &NoiseConfig::default(),
                &[0.0, 0.2],
                3,
                4,
            )
            .unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.records.len(), 6);
        assert_eq!(a.summary.len(), 2);
        assert_eq!(a.records[3].sigma, 0.2);
        assert_eq!(a.records[3].trial, 0);
        // At sigma = 0 every trial is identical.
        assert_eq!(a.summary[0].std_accuracy, 0.0);
        assert!(eval_under_noise(
            &m,
            &data.test,
            &QuantConfig::int(8),
            &NoiseConfig::default(),
            &[],
            1,
            0
        )
        .is_err());
    }
}
