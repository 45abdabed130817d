// SPDX-License-Identifier: Apache-2.0

//! The JSON configuration file, presets and `--set` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use oen_core::hardware::{validate as validate_hardware, HardwareConfig};
use oen_core::workload::TransformerDims;
use oen_quant::data::DatasetSpec;
use oen_quant::model::ModelSpec;
use oen_quant::noise::NoiseConfig;
use oen_quant::quantize::QuantConfig;
use oen_quant::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseStudy {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub train: TrainConfig,
    /// Quantization-aware fine-tuning schedule for the `qat` variant.
    pub finetune: TrainConfig,
    pub quant: QuantConfig,
    /// Noise mode and operand selection; sigma is taken from `sigmas`.
    pub noise: NoiseConfig,
    pub sigmas: Vec<f64>,
    pub trials: u64,
}

impl Default for NoiseStudy {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::default(),
            model: ModelSpec::default(),
            train: TrainConfig::default(),
            finetune: TrainConfig {
                epochs: 3,
                learning_rate: 0.005,
                ..TrainConfig::default()
            },
            quant: QuantConfig::default(),
            noise: NoiseConfig::default(),
            sigmas: vec![0.0, 0.02, 0.04, 0.06, 0.08, 0.10],
            trials: 5,
        }
    }
}

impl NoiseStudy {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut push = |field: &str, r: std::result::Result<(), oen_quant::QuantError>| {
            if let Err(e) = r {
                v.push(format!("noise_study.{field}: {e}"));
            }
        };
        push("dataset", self.dataset.validate());
        push("model", self.model.validate());
        push("train", self.train.validate());
        push("finetune", self.finetune.validate());
        push("quant", self.quant.validate());
        for &s in &self.sigmas {
            push(
                "sigmas",
                NoiseConfig {
                    sigma: s,
                    ..self.noise
                }
                .validate(),
            );
        }
        if self.sigmas.is_empty() {
            v.push("noise_study.sigmas: must not be empty".into());
        }
        if self.trials == 0 {
            v.push("noise_study.trials: must be >= 1".into());
        }
        v
    }
}

fn default_dims() -> TransformerDims {
    TransformerDims::gpt3()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "default_dims")]
    pub dims: TransformerDims,
    pub hardware: HardwareConfig,
    #[serde(default)]
    pub noise_study: NoiseStudy,
}

pub const PRESETS: [&str; 2] = HardwareConfig::PRESETS;

impl ConfigFile {
    pub fn preset(name: &str) -> Option<Self> {
        Some(Self {
            dims: TransformerDims::gpt3(),
            hardware: HardwareConfig::preset(name)?,
            noise_study: NoiseStudy::default(),
        })
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Every broken rule, formatted `field: rule`.
    pub fn violations(&self) -> Vec<String> {
        let mut v: Vec<String> = validate_hardware(&self.hardware)
            .into_iter()
            .map(|x| format!("hardware.{x}"))
            .collect();
        if let Err(e) = self.dims.validate() {
            v.push(format!("dims: {e}"));
        }
        v.extend(self.noise_study.violations());
        v
    }
}

/// Where the configuration came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSource {
    pub path: Option<PathBuf>,
    pub preset: Option<String>,
    pub overrides: Vec<String>,
}

/// Loads the base configuration: an explicit preset wins over a config
/// path, and the table1 preset is the fallback.
pub fn load(
    path: Option<&Path>,
    preset: Option<&str>,
    overrides: &[String],
) -> Result<(ConfigFile, ConfigSource)> {
    let (mut cfg, source_path, source_preset) = match (preset, path) {
        (Some(p), _) => {
            let cfg = ConfigFile::preset(p).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown preset '{p}', expected one of {}",
                    PRESETS.join(", ")
                ))
            })?;
            (cfg, None, Some(p.to_string()))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let cfg = ConfigFile::from_json(&text)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            (cfg, Some(path.to_path_buf()), None)
        }
        (None, None) => (
            ConfigFile::preset("table1").expect("built-in preset"),
            None,
            Some("table1".into()),
        ),
    };
    for token in overrides {
        cfg = apply_override(&cfg, token)?;
    }
    Ok((
        cfg,
        ConfigSource {
            path: source_path,
            preset: source_preset,
            overrides: overrides.to_vec(),
        },
    ))
}

/// Applies one `dotted.path=value` override. Paths resolve from the file
/// root first and otherwise under `hardware`. The value is parsed as JSON
/// and taken as a string when that fails.
pub fn apply_override(cfg: &ConfigFile, token: &str) -> Result<ConfigFile> {
    let bad = |why: &str| CliError::Usage(format!("--set {token}: {why}"));
    let (path, raw) = token
        .split_once('=')
        .ok_or_else(|| bad("expected PATH=VALUE"))?;
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(bad("empty path segment"));
    }
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut root = serde_json::to_value(cfg).expect("config serializes");
    let mut segs: Vec<&str> = path.split('.').collect();
    if !root.as_object().expect("object").contains_key(segs[0]) {
        segs.insert(0, "hardware");
    }
    let (last, parents) = segs.split_last().expect("non-empty");
    let mut node = &mut root;
    for seg in parents {
        node = node
            .as_object_mut()
            .and_then(|o| o.get_mut(*seg))
            .ok_or_else(|| bad(&format!("unknown field '{seg}'")))?;
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| bad(&format!("'{}' is not a section", parents.join("."))))?;
    obj.insert(last.to_string(), value);
    serde_json::from_value(root).map_err(|e| bad(&e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_resolve_under_hardware() {
        let base = ConfigFile::preset("table1").unwrap();
        let c = apply_override(&base, "clocking.f_clk_hz=1e9").unwrap();
        assert_eq!(c.hardware.clocking.f_clk_hz, 1e9);
        let c = apply_override(&base, "hardware.geometry.rows=64").unwrap();
        assert_eq!(c.hardware.geometry.rows, 64);
        let c = apply_override(&base, "dims.layers=3").unwrap();
        assert_eq!(c.dims.layers, 3);
        let c = apply_override(&base, "noise_study.trials=2").unwrap();
        assert_eq!(c.noise_study.trials, 2);
        let c = apply_override(&base, "noise_study.noise.mode=frozen_per_device").unwrap();
        assert_eq!(
            c.noise_study.noise.mode,
            oen_quant::noise::NoiseMode::FrozenPerDevice
        );
    }

    #[test]
    fn bad_overrides_are_usage_errors() {
        let base = ConfigFile::preset("table1").unwrap();
        for t in [
            "clocking.f_clok_hz=1",
            "nope.x=1",
            "clocking.f_clk_hz",
            "geometry.rows=abc",
            "a..b=1",
        ] {
            let e = apply_override(&base, t).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{t}");
            assert!(e.to_string().contains(t), "{e}");
        }
    }

    #[test]
    fn presets_validate_and_roundtrip() {
        for p in PRESETS {
            let c = ConfigFile::preset(p).unwrap();
            assert!(c.violations().is_empty(), "{p}: {:?}", c.violations());
            assert_eq!(ConfigFile::from_json(&c.to_json()).unwrap(), c);
        }
    }
}
