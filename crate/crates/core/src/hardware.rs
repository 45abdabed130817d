// SPDX-License-Identifier: Apache-2.0

//! Hardware configuration, validation and derived memory/I-O budgets.
//!
//! Field names carry their unit so that the JSON config is self-describing.

use serde::{Deserialize, Serialize};

use crate::constants::photon_energy_j;
use crate::dac_scaling::DacModel;
use crate::perf_analytics::{calibrate_table1, Table1Targets};
use crate::workload::TransformerDims;

/// Pixel array and the ADC array stacked underneath it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    /// Pixel rows, one per token (C_T).
    pub rows: u64,
    /// Pixel columns, one per weight row (C_W).
    pub cols: u64,
    pub pixel_pitch_um: f64,
    /// Pixel rows read out by one ADC.
    pub adc_block_rows: u64,
    /// Pixel columns read out by one ADC.
    pub adc_block_cols: u64,
    pub adc_array_rows: u64,
    pub adc_array_cols: u64,
    pub adc_width_um: f64,
    pub adc_height_um: f64,
}

impl ArrayGeometry {
    pub fn pixels(&self) -> u64 {
        self.rows * self.cols
    }

    pub fn pixel_area_um2(&self) -> f64 {
        self.pixel_pitch_um * self.pixel_pitch_um
    }

    pub fn adc_count(&self) -> u64 {
        self.adc_array_rows * self.adc_array_cols
    }

    pub fn pixels_per_adc(&self) -> u64 {
        self.adc_block_rows * self.adc_block_cols
    }

    /// Total ADC array area, mm².
    pub fn adc_array_area_mm2(&self) -> f64 {
        self.adc_count() as f64 * self.adc_width_um * self.adc_height_um * 1e-6
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockingParams {
    /// DAC clock, one input/weight element per period.
    pub f_clk_hz: f64,
    /// Sub-cycles per element (r): 1, 2 or 4.
    pub sub_cycles: u32,
    pub adc_sample_rate_hz: f64,
    pub adc_bits: u32,
    pub dac_bits: u32,
}

impl ClockingParams {
    /// 2^b − 1 quantization steps of the ADC.
    pub fn adc_steps(&self) -> f64 {
        (2f64).powi(self.adc_bits as i32) - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalParams {
    pub wavelength_nm: f64,
    /// Overrides hc/λ when present; must agree with it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_energy_j: Option<f64>,
    /// Demodulator quantum efficiency (η_DM).
    pub eta_dm: f64,
    /// Emitter power conversion efficiency (η_EM).
    pub eta_em: f64,
    pub dark_current_a: f64,
    /// Emitter duty cycle (α_EM).
    pub emitter_duty_cycle: f64,
    pub tap_gain_plus: f64,
    pub tap_gain_minus: f64,
    pub full_well_e: f64,
    pub pixel_capacitance_f: f64,
}

impl OpticalParams {
    pub fn photon_energy(&self) -> f64 {
        self.photon_energy_j
            .unwrap_or_else(|| photon_energy_j(self.wavelength_nm))
    }
}

/// Per-event energies. E_DAC|DM comes from the column DAC model in [`DacConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    /// Memory read per value, J.
    pub e_read_j: f64,
    /// Memory write per value, J.
    pub e_write_j: f64,
    /// Demodulator pixel per update, J.
    pub e_dm_j: f64,
    /// ADC per conversion, J.
    pub e_adc_j: f64,
    /// Extra reduction of the column IDAC energy for the chosen row count.
    pub idac_opt_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaParams {
    /// Area per DAC, µm².
    pub a_dac_um2: f64,
    /// Processor, controller and router area, mm².
    pub a_other_mm2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HbmParams {
    pub chips: u64,
    pub capacity_per_chip_bytes: u64,
    pub rate_per_chip_bytes_s: f64,
    pub energy_per_bit_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DacConfig {
    /// Column DAC driving the demodulator gates of C_T pixels.
    pub pixel: DacModel,
    /// Row DAC driving the emitters of C_W pixels.
    pub emitter: DacModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareConfig {
    pub geometry: ArrayGeometry,
    pub clocking: ClockingParams,
    pub optics: OpticalParams,
    pub energy: EnergyParams,
    pub area: AreaParams,
    pub hbm: HbmParams,
    pub dac: DacConfig,
    /// Where the calibrated scalars came from; informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl HardwareConfig {
    /// 2048 × 3072 array at 2 GHz with r = 2, before any back-solved scalars.
    pub fn table1_uncalibrated() -> Self {
        let hbm = HbmParams {
            chips: 8,
            capacity_per_chip_bytes: 24_000_000_000,
            rate_per_chip_bytes_s: 1.2e12,
            energy_per_bit_j: 3.4e-12,
        };
        Self {
            geometry: ArrayGeometry {
                rows: 2048,
                cols: 3072,
                pixel_pitch_um: 10.0,
                adc_block_rows: 4,
                adc_block_cols: 20,
                adc_array_rows: 512,
                adc_array_cols: 154,
                adc_width_um: 200.0,
                adc_height_um: 40.0,
            },
            clocking: ClockingParams {
                f_clk_hz: 2e9,
                sub_cycles: 2,
                adc_sample_rate_hz: 100e6,
                adc_bits: 8,
                dac_bits: 8,
            },
            optics: OpticalParams {
                wavelength_nm: 940.0,
                photon_energy_j: None,
                eta_dm: 0.8,
                eta_em: 0.3,
                dark_current_a: 10e-12,
                emitter_duty_cycle: 1.0,
                tap_gain_plus: 1.0,
                tap_gain_minus: 1.0,
                full_well_e: 1e7,
                pixel_capacitance_f: 50e-15,
            },
            energy: EnergyParams {
                e_read_j: hbm.energy_per_bit_j * 8.0,
                e_write_j: hbm.energy_per_bit_j * 8.0,
                e_dm_j: 2e-15,
                e_adc_j: 2e-12,
                idac_opt_factor: 1.85,
            },
            area: AreaParams {
                a_dac_um2: DacModel::idac_preset(1e6).a_fixed_um2,
                a_other_mm2: 0.0,
            },
            hbm,
            dac: DacConfig {
                pixel: DacModel::idac_preset(1e6),
                emitter: DacModel::idac_preset(1e6),
            },
            provenance: None,
        }
    }

    /// The 2 GHz reference point with E_DM and A_DAC back-solved from the
    /// published power efficiency and area.
    pub fn table1() -> Self {
        calibrate_table1(
            &Self::table1_uncalibrated(),
            &TransformerDims::gpt3(),
            &Table1Targets::default(),
        )
        .expect("reference preset calibrates")
        .config
    }

    /// Same array at the 1 GHz clock used for the memory and pipeline budgets.
    pub fn budget() -> Self {
        let mut cfg = Self::table1();
        cfg.clocking.f_clk_hz = 1e9;
        cfg
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "table1" => Some(Self::table1()),
            "budget" => Some(Self::budget()),
            _ => None,
        }
    }

    pub const PRESETS: [&'static str; 2] = ["table1", "budget"];
}

/// A broken configuration rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

fn positive(v: &mut Vec<Violation>, field: &str, x: f64) {
    if !(x > 0.0 && x.is_finite()) {
        v.push(Violation::new(
            field,
            format!("must be a finite value > 0, got {x}"),
        ));
    }
}

fn non_negative(v: &mut Vec<Violation>, field: &str, x: f64) {
    if !(x >= 0.0 && x.is_finite()) {
        v.push(Violation::new(
            field,
            format!("must be a finite value >= 0, got {x}"),
        ));
    }
}

fn efficiency(v: &mut Vec<Violation>, field: &str, x: f64) {
    if !(x > 0.0 && x <= 1.0) {
        v.push(Violation::new(
            field,
            format!("must lie in (0, 1], got {x}"),
        ));
    }
}

/// Every broken invariant in `config`; empty when the config is usable.
pub fn validate(config: &HardwareConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    let g = &config.geometry;
    for (field, x) in [
        ("geometry.rows", g.rows),
        ("geometry.cols", g.cols),
        ("geometry.adc_block_rows", g.adc_block_rows),
        ("geometry.adc_block_cols", g.adc_block_cols),
        ("geometry.adc_array_rows", g.adc_array_rows),
        ("geometry.adc_array_cols", g.adc_array_cols),
    ] {
        if x == 0 {
            v.push(Violation::new(field, "must be >= 1"));
        }
    }
    positive(&mut v, "geometry.pixel_pitch_um", g.pixel_pitch_um);
    non_negative(&mut v, "geometry.adc_width_um", g.adc_width_um);
    non_negative(&mut v, "geometry.adc_height_um", g.adc_height_um);
    // Per-axis coverage; slack (e.g. 154·20 = 3080 ≥ 3072) is allowed.
    if g.adc_array_rows * g.adc_block_rows < g.rows {
        v.push(Violation::new(
            "geometry.adc_array_rows",
            format!(
                "ADC rows cover {} pixel rows, array has {}",
                g.adc_array_rows * g.adc_block_rows,
                g.rows
            ),
        ));
    }
    if g.adc_array_cols * g.adc_block_cols < g.cols {
        v.push(Violation::new(
            "geometry.adc_array_cols",
            format!(
                "ADC columns cover {} pixel columns, array has {}",
                g.adc_array_cols * g.adc_block_cols,
                g.cols
            ),
        ));
    }

    let c = &config.clocking;
    positive(&mut v, "clocking.f_clk_hz", c.f_clk_hz);
    positive(&mut v, "clocking.adc_sample_rate_hz", c.adc_sample_rate_hz);
    if !matches!(c.sub_cycles, 1 | 2 | 4) {
        v.push(Violation::new(
            "clocking.sub_cycles",
            format!("must be 1, 2 or 4, got {}", c.sub_cycles),
        ));
    }
    if !(2..=52).contains(&c.adc_bits) {
        v.push(Violation::new(
            "clocking.adc_bits",
            format!("must lie in [2, 52], got {}", c.adc_bits),
        ));
    }
    if !(1..=52).contains(&c.dac_bits) {
        v.push(Violation::new(
            "clocking.dac_bits",
            format!("must lie in [1, 52], got {}", c.dac_bits),
        ));
    }

    let o = &config.optics;
    positive(&mut v, "optics.wavelength_nm", o.wavelength_nm);
    if let Some(e) = o.photon_energy_j {
        let expected = photon_energy_j(o.wavelength_nm);
        if !(e > 0.0) || ((e - expected) / expected).abs() > 1e-6 {
            v.push(Violation::new(
                "optics.photon_energy_j",
                format!("must equal hc/wavelength = {expected:e} J, got {e:e}"),
            ));
        }
    }
    efficiency(&mut v, "optics.eta_dm", o.eta_dm);
    efficiency(&mut v, "optics.eta_em", o.eta_em);
    efficiency(&mut v, "optics.emitter_duty_cycle", o.emitter_duty_cycle);
    non_negative(&mut v, "optics.dark_current_a", o.dark_current_a);
    positive(&mut v, "optics.tap_gain_plus", o.tap_gain_plus);
    positive(&mut v, "optics.tap_gain_minus", o.tap_gain_minus);
    positive(&mut v, "optics.full_well_e", o.full_well_e);
    positive(&mut v, "optics.pixel_capacitance_f", o.pixel_capacitance_f);

    let e = &config.energy;
    non_negative(&mut v, "energy.e_read_j", e.e_read_j);
    non_negative(&mut v, "energy.e_write_j", e.e_write_j);
    non_negative(&mut v, "energy.e_dm_j", e.e_dm_j);
    non_negative(&mut v, "energy.e_adc_j", e.e_adc_j);
    positive(&mut v, "energy.idac_opt_factor", e.idac_opt_factor);

    non_negative(&mut v, "area.a_dac_um2", config.area.a_dac_um2);
    non_negative(&mut v, "area.a_other_mm2", config.area.a_other_mm2);

    let h = &config.hbm;
    non_negative(&mut v, "hbm.rate_per_chip_bytes_s", h.rate_per_chip_bytes_s);
    non_negative(&mut v, "hbm.energy_per_bit_j", h.energy_per_bit_j);

    for (prefix, m) in [
        ("dac.pixel", &config.dac.pixel),
        ("dac.emitter", &config.dac.emitter),
    ] {
        for (field, rule) in m.violations() {
            v.push(Violation::new(format!("{prefix}.{field}"), rule));
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryBudget {
    pub required_bytes: u128,
    pub available_bytes: u128,
    pub ok: bool,
}

/// Weight storage needed for `dims` against the HBM capacity.
pub fn memory_budget(
    config: &HardwareConfig,
    dims: &TransformerDims,
    bytes_per_weight: u64,
) -> MemoryBudget {
    let required_bytes = dims.weight_count() * bytes_per_weight as u128;
    let available_bytes = config.hbm.chips as u128 * config.hbm.capacity_per_chip_bytes as u128;
    MemoryBudget {
        required_bytes,
        available_bytes,
        ok: required_bytes <= available_bytes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IoRates {
    /// Row and column DACs together, bytes/s.
    pub dac_read_rate_bytes_s: f64,
    /// All ADCs together, bytes/s.
    pub adc_write_rate_bytes_s: f64,
    /// Aggregate HBM bandwidth, bytes/s.
    pub hbm_rate_bytes_s: f64,
    /// HBM keeps up with each of the two streams.
    pub ok: bool,
}

pub fn io_rates(config: &HardwareConfig) -> IoRates {
    let g = &config.geometry;
    let c = &config.clocking;
    let dac_read_rate_bytes_s = (g.rows + g.cols) as f64 * c.f_clk_hz * (c.dac_bits as f64 / 8.0);
    let adc_write_rate_bytes_s =
        g.adc_count() as f64 * c.adc_sample_rate_hz * (c.adc_bits as f64 / 8.0);
    let hbm_rate_bytes_s = config.hbm.chips as f64 * config.hbm.rate_per_chip_bytes_s;
    IoRates {
        dac_read_rate_bytes_s,
        adc_write_rate_bytes_s,
        hbm_rate_bytes_s,
        ok: hbm_rate_bytes_s >= dac_read_rate_bytes_s && hbm_rate_bytes_s >= adc_write_rate_bytes_s,
    }
}
