// SPDX-License-Identifier: Apache-2.0

//! Energy and area scaling of the column (demodulator) and row (emitter) DACs.
//!
//! Both architectures are modeled with the affine family
//! `e_fixed + e_per_pixel·n` for energy per update and
//! `a_fixed + a_per_pixel·n` for area, where `n` is the number of pixels
//! the DAC drives in parallel.
//!
//! - R-2R ladder ("RDAC"): its internal resistance has to stay well below the
//!   parallel load, so the ladder current grows with `n`. No fixed energy,
//!   area linear in `n`.
//! - Current steering ("IDAC"): a bias network sets a fixed energy floor and
//!   higher current is reached by widening devices, so area does not grow.
//!
//! The preset coefficients are calibration parameters, not measured data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::HardwareConfig;

/// Full-scale output swing used by the presets, V.
pub const PRESET_SWING_V: f64 = 1.0;
/// Clock the presets are referenced to, Hz.
pub const PRESET_CLOCK_HZ: f64 = 1e9;
/// RDAC ladder current as a multiple of the load current.
pub const RDAC_LADDER_RATIO: f64 = 10.0;
/// IDAC bias-network energy floor per update, J.
pub const IDAC_BIAS_ENERGY_J: f64 = 40e-12;
/// IDAC area, µm² (constant in load).
pub const IDAC_AREA_UM2: f64 = 2500.0;
/// RDAC area for an unloaded ladder, µm².
pub const RDAC_BASE_AREA_UM2: f64 = 40.0;
/// RDAC area per pixel at a 1 MΩ load, µm²; scales as 1/R_load.
pub const RDAC_AREA_PER_PIXEL_1MOHM_UM2: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DacKind {
    Rdac,
    Idac,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DacModel {
    pub kind: DacKind,
    /// Input impedance of one driven pixel, Ω.
    pub load_impedance_ohm: f64,
    pub e_fixed_j: f64,
    pub e_per_pixel_j: f64,
    pub a_fixed_um2: f64,
    pub a_per_pixel_um2: f64,
    pub clock_ref_hz: f64,
}

/// Energy one pixel load dissipates over a clock period at full swing.
fn load_energy_j(load_impedance_ohm: f64) -> f64 {
    PRESET_SWING_V * PRESET_SWING_V / load_impedance_ohm / PRESET_CLOCK_HZ
}

impl DacModel {
    pub fn rdac_preset(load_impedance_ohm: f64) -> Self {
        Self {
            kind: DacKind::Rdac,
            load_impedance_ohm,
            e_fixed_j: 0.0,
            e_per_pixel_j: (1.0 + RDAC_LADDER_RATIO) * load_energy_j(load_impedance_ohm),
            a_fixed_um2: RDAC_BASE_AREA_UM2,
            a_per_pixel_um2: RDAC_AREA_PER_PIXEL_1MOHM_UM2 * 1e6 / load_impedance_ohm,
            clock_ref_hz: PRESET_CLOCK_HZ,
        }
    }

    pub fn idac_preset(load_impedance_ohm: f64) -> Self {
        Self {
            kind: DacKind::Idac,
            load_impedance_ohm,
            e_fixed_j: IDAC_BIAS_ENERGY_J,
            e_per_pixel_j: load_energy_j(load_impedance_ohm),
            a_fixed_um2: IDAC_AREA_UM2,
            a_per_pixel_um2: 0.0,
            clock_ref_hz: PRESET_CLOCK_HZ,
        }
    }

    /// Structural violations as `(field, rule)` pairs.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        for (name, x) in [
            ("e_fixed_j", self.e_fixed_j),
            ("e_per_pixel_j", self.e_per_pixel_j),
            ("a_fixed_um2", self.a_fixed_um2),
            ("a_per_pixel_um2", self.a_per_pixel_um2),
        ] {
            if !(x >= 0.0) {
                v.push((name, format!("must be >= 0, got {x}")));
            }
        }
        if !(self.load_impedance_ohm > 0.0) {
            v.push(("load_impedance_ohm", "must be > 0".to_string()));
        }
        if !(self.clock_ref_hz > 0.0) {
            v.push(("clock_ref_hz", "must be > 0".to_string()));
        }
        match self.kind {
            DacKind::Idac if self.a_per_pixel_um2 != 0.0 => v.push((
                "a_per_pixel_um2",
                "IDAC area does not scale with load; must be 0".to_string(),
            )),
            DacKind::Rdac if self.e_fixed_j != 0.0 => {
                v.push(("e_fixed_j", "RDAC has no bias floor; must be 0".to_string()))
            }
            _ => {}
        }
        v
    }
}

fn check_pixels(n_pixels: u64) -> Result<f64> {
    if n_pixels == 0 {
        return Err(Error::Domain("DAC must drive at least one pixel".into()));
    }
    Ok(n_pixels as f64)
}

/// Energy per DAC update while driving `n_pixels` in parallel, J.
pub fn dac_energy_total(model: &DacModel, n_pixels: u64) -> Result<f64> {
    let n = check_pixels(n_pixels)?;
    Ok(match model.kind {
        DacKind::Rdac => model.e_per_pixel_j * n,
        DacKind::Idac => model.e_fixed_j + model.e_per_pixel_j * n,
    })
}

pub fn dac_energy_per_pixel(model: &DacModel, n_pixels: u64) -> Result<f64> {
    let total = dac_energy_total(model, n_pixels)?;
    Ok(total / n_pixels as f64)
}

/// DAC area, µm².
pub fn dac_area(model: &DacModel, n_pixels: u64) -> Result<f64> {
    let n = check_pixels(n_pixels)?;
    Ok(match model.kind {
        DacKind::Rdac => model.a_fixed_um2 + model.a_per_pixel_um2 * n,
        DacKind::Idac => model.a_fixed_um2,
    })
}

/// Pixel count above which the IDAC total energy drops below the RDAC's.
///
/// `None` when the RDAC slope never overtakes the IDAC floor.
pub fn idac_rdac_crossover(rdac: &DacModel, idac: &DacModel) -> Option<f64> {
    let slope_gap = rdac.e_per_pixel_j - idac.e_per_pixel_j;
    if slope_gap <= 0.0 {
        return None;
    }
    Some((idac.e_fixed_j - rdac.e_fixed_j) / slope_gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DacWarning {
    /// The demodulator-column DAC is an RDAC; the NPU is designed around the IDAC.
    RdacSelected,
}

/// Column-DAC energy per update after the array-specific IDAC optimization.
///
/// This is the E_DAC|DM value that enters the power model, divided by C_T
/// there because one column DAC is shared by all C_T pixels.
pub fn effective_edac_dm(config: &HardwareConfig) -> Result<(f64, Option<DacWarning>)> {
    let model = &config.dac.pixel;
    let factor = config.energy.idac_opt_factor;
    if !(factor > 0.0) {
        return Err(Error::Config(format!(
            "idac_opt_factor must be > 0, got {factor}"
        )));
    }
    let total = dac_energy_total(model, config.geometry.rows)?;
    let warning = (model.kind == DacKind::Rdac).then_some(DacWarning::RdacSelected);
    Ok((total / factor, warning))
}

/// One row of the DAC scaling table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DacScalingRow {
    pub kind: DacKind,
    pub load_impedance_ohm: f64,
    pub n_pixels: u64,
    pub energy_total_j: f64,
    pub energy_per_pixel_j: f64,
    pub area_um2: f64,
}

/// Energy and area for each model over the given pixel counts.
pub fn scaling_table(models: &[DacModel], pixel_counts: &[u64]) -> Result<Vec<DacScalingRow>> {
    let mut rows = Vec::with_capacity(models.len() * pixel_counts.len());
    for m in models {
        for &n in pixel_counts {
            rows.push(DacScalingRow {
                kind: m.kind,
                load_impedance_ohm: m.load_impedance_ohm,
                n_pixels: n,
                energy_total_j: dac_energy_total(m, n)?,
                energy_per_pixel_j: dac_energy_per_pixel(m, n)?,
                area_um2: dac_area(m, n)?,
            });
        }
    }
    Ok(rows)
}

/// The four preset models: RDAC and IDAC at 100 kΩ and 1 MΩ pixel loads.
pub fn preset_models() -> Vec<DacModel> {
    [1e5, 1e6]
        .into_iter()
        .flat_map(|r| [DacModel::rdac_preset(r), DacModel::idac_preset(r)])
        .collect()
}

/// Powers of two from 1 to `max` inclusive.
pub fn doubling_counts(max: u64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |n| n.checked_mul(2))
        .take_while(|n| *n <= max)
        .collect()
}
