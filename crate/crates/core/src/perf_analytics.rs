// SPDX-License-Identifier: Apache-2.0

//! Closed-form system model: tasks, delay, speed, power, area and the
//! derived efficiencies, plus design-space sweeps over the array size.
//!
//! Power is expressed through the energy spent per pixel per clock cycle:
//!
//! ```text
//! P = ( E_u + E_read/C_W + E_DM + (E_DAC|DM + E_read)/C_T + (E_ADC + E_write)/(N·r) ) · f_clk·C_T·C_W
//! ```
//!
//! The first and last terms depend on the vector length of each weight
//! product, so the full form averages them over the workload plan weighted
//! by MAC count. [`PowerForm::LargeN`] drops both.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dac_scaling::{effective_edac_dm, DacWarning};
use crate::energy_snr::min_pulse_energy;
use crate::error::{Error, Result};
use crate::hardware::HardwareConfig;
use crate::workload::{total_mac_ops, workload_plan, TransformerDims, VmmKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerForm {
    /// Every term, including emitter pulse energy and ADC/write-back.
    #[default]
    Full,
    /// Vector length N ≫ 1: emitter and output terms dropped.
    LargeN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfOptions {
    /// Leave HBM read/write energy out, as for the published comparison.
    pub exclude_hbm: bool,
    pub power_form: PowerForm,
}

impl Default for PerfOptions {
    fn default() -> Self {
        Self {
            exclude_hbm: true,
            power_form: PowerForm::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RepeatCounts {
    /// Temporal repeats over tokens, ceil(T/C_T).
    pub r_t: u64,
    pub r_w_qkv: u64,
    pub r_w_output: u64,
    pub r_w_up: u64,
    pub r_w_down: u64,
}

impl RepeatCounts {
    pub fn r_w(&self, kind: VmmKind) -> u64 {
        match kind {
            VmmKind::QueryKeyValue => self.r_w_qkv,
            VmmKind::Output => self.r_w_output,
            VmmKind::Up => self.r_w_up,
            VmmKind::Down => self.r_w_down,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerfWarning {
    /// C_T does not divide T; the last token repeat runs with idle rows.
    IdleRows,
    /// C_W does not divide some weight-row count.
    IdleColumns,
    Dac(DacWarning),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delay {
    /// Illumination time of every repeat, ADC readout excluded, s.
    pub seconds: f64,
    /// f⁻¹·(4N² + 2MN)·r·T·L/(C_T·C_W), when S·H = N.
    pub closed_form_seconds: Option<f64>,
    pub repeats: RepeatCounts,
    pub warnings: Vec<PerfWarning>,
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

pub fn system_delay(dims: &TransformerDims, config: &HardwareConfig) -> Result<Delay> {
    let plan = workload_plan(dims)?;
    let g = &config.geometry;
    let c = &config.clocking;
    if g.rows == 0 || g.cols == 0 {
        return Err(Error::Config(
            "array needs at least one row and column".into(),
        ));
    }
    let r_t = ceil_div(dims.tokens, g.rows);
    let mut warnings = Vec::new();
    if !dims.tokens.is_multiple_of(g.rows) {
        warnings.push(PerfWarning::IdleRows);
    }
    let mut r_w = [0u64; 4];
    let mut cycles_per_token_repeat: u128 = 0;
    for (i, kind) in VmmKind::ALL.iter().enumerate() {
        let s = plan.shape(*kind);
        r_w[i] = ceil_div(s.out_dim, g.cols);
        if s.out_dim % g.cols != 0 && !warnings.contains(&PerfWarning::IdleColumns) {
            warnings.push(PerfWarning::IdleColumns);
        }
        cycles_per_token_repeat += s.in_dim as u128 * c.sub_cycles as u128 * r_w[i] as u128;
    }
    let cycles = cycles_per_token_repeat * r_t as u128 * dims.layers as u128;
    let seconds = cycles as f64 / c.f_clk_hz;

    let closed_form_seconds = dims.heads_fill_embedding().then(|| {
        let (n, m) = (dims.embed_dim as f64, dims.ff_dim as f64);
        (4.0 * n * n + 2.0 * m * n) * c.sub_cycles as f64 * dims.tokens as f64 * dims.layers as f64
            / (c.f_clk_hz * g.rows as f64 * g.cols as f64)
    });

    Ok(Delay {
        seconds,
        closed_form_seconds,
        repeats: RepeatCounts {
            r_t,
            r_w_qkv: r_w[0],
            r_w_output: r_w[1],
            r_w_up: r_w[2],
            r_w_down: r_w[3],
        },
        warnings,
    })
}

/// γ = 2·f_clk·r⁻¹·C_T·C_W, ops/s.
pub fn computing_speed(config: &HardwareConfig) -> f64 {
    let g = &config.geometry;
    2.0 * config.clocking.f_clk_hz / config.clocking.sub_cycles as f64
        * g.rows as f64
        * g.cols as f64
}

/// Energy per pixel per clock cycle, split by origin. Also reused, scaled by
/// f_clk·C_T·C_W, as a power breakdown in watts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    /// Minimum emitter pulse energy.
    pub emitter_pulse: f64,
    /// Input read from memory, shared by a row of C_W pixels.
    pub input_read: f64,
    pub demodulator: f64,
    /// Column DAC, shared by C_T pixels.
    pub pixel_dac: f64,
    /// Weight read from memory, shared by a column of C_T pixels.
    pub weight_read: f64,
    /// ADC conversion and write-back, once per N·r cycles.
    pub output: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.emitter_pulse
            + self.input_read
            + self.demodulator
            + self.pixel_dac
            + self.weight_read
            + self.output
    }

    fn scaled(&self, k: f64) -> Self {
        Self {
            emitter_pulse: self.emitter_pulse * k,
            input_read: self.input_read * k,
            demodulator: self.demodulator * k,
            pixel_dac: self.pixel_dac * k,
            weight_read: self.weight_read * k,
            output: self.output * k,
        }
    }
}

/// MAC-weighted energy per pixel-cycle over one layer of the workload.
pub fn energy_per_pixel_cycle(
    dims: &TransformerDims,
    config: &HardwareConfig,
    opts: &PerfOptions,
) -> Result<(EnergyBreakdown, Option<DacWarning>)> {
    let plan = workload_plan(dims)?;
    let g = &config.geometry;
    let e = &config.energy;
    let r = config.clocking.sub_cycles as f64;
    let (c_t, c_w) = (g.rows as f64, g.cols as f64);
    let (e_read, e_write) = if opts.exclude_hbm {
        (0.0, 0.0)
    } else {
        (e.e_read_j, e.e_write_j)
    };
    let (dac_eff, warning) = effective_edac_dm(config)?;

    let (mut emitter_pulse, mut output) = (0.0, 0.0);
    if opts.power_form == PowerForm::Full {
        let mut weight_sum = 0.0;
        for (_, s) in &plan.vmms {
            let w = s.out_dim as f64 * s.in_dim as f64;
            let e_u = min_pulse_energy(&config.optics, &config.clocking, s.in_dim)?.e_u_j;
            emitter_pulse += w * e_u;
            output += w * (e.e_adc_j + e_write) / (s.in_dim as f64 * r);
            weight_sum += w;
        }
        emitter_pulse /= weight_sum;
        output /= weight_sum;
    }

    Ok((
        EnergyBreakdown {
            emitter_pulse,
            input_read: e_read / c_w,
            demodulator: e.e_dm_j,
            pixel_dac: dac_eff / c_t,
            weight_read: e_read / c_t,
            output,
        },
        warning,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub power_w: f64,
    pub energy_per_pixel_cycle_j: EnergyBreakdown,
    pub breakdown_w: EnergyBreakdown,
    pub dac_warning: Option<DacWarning>,
}

pub fn system_power(
    dims: &TransformerDims,
    config: &HardwareConfig,
    opts: &PerfOptions,
) -> Result<PowerReport> {
    let (per_cycle, dac_warning) = energy_per_pixel_cycle(dims, config, opts)?;
    let g = &config.geometry;
    let rate = config.clocking.f_clk_hz * g.rows as f64 * g.cols as f64;
    let breakdown_w = per_cycle.scaled(rate);
    Ok(PowerReport {
        power_w: breakdown_w.total(),
        energy_per_pixel_cycle_j: per_cycle,
        breakdown_w,
        dac_warning,
    })
}

/// η_p = 2r⁻¹ / (energy per pixel-cycle), ops/s/W.
pub fn power_efficiency(
    dims: &TransformerDims,
    config: &HardwareConfig,
    opts: &PerfOptions,
) -> Result<f64> {
    let (per_cycle, _) = energy_per_pixel_cycle(dims, config, opts)?;
    Ok(2.0 / config.clocking.sub_cycles as f64 / per_cycle.total())
}

/// The large-N closed form 2r⁻¹ / (E_read/C_W + E_DM + (E_DAC|DM + E_read)/C_T).
pub fn power_efficiency_closed_form(config: &HardwareConfig, exclude_hbm: bool) -> Result<f64> {
    let g = &config.geometry;
    let e_read = if exclude_hbm {
        0.0
    } else {
        config.energy.e_read_j
    };
    let (dac_eff, _) = effective_edac_dm(config)?;
    let denom = e_read / g.cols as f64 + config.energy.e_dm_j + (dac_eff + e_read) / g.rows as f64;
    Ok(2.0 / config.clocking.sub_cycles as f64 / denom)
}

/// A_sys = A_pixel·C_T·C_W + A_DAC·(C_T + C_W) + A_other, mm².
pub fn system_area(config: &HardwareConfig) -> f64 {
    let g = &config.geometry;
    g.pixel_area_um2() * 1e-6 * g.pixels() as f64
        + config.area.a_dac_um2 * 1e-6 * (g.rows + g.cols) as f64
        + config.area.a_other_mm2
}

/// Closed-form area efficiency, ops/s/mm².
pub fn area_efficiency(config: &HardwareConfig) -> f64 {
    let g = &config.geometry;
    let r_inv = 1.0 / config.clocking.sub_cycles as f64;
    let (c_t, c_w) = (g.rows as f64, g.cols as f64);
    let a_pixel = g.pixel_area_um2() * 1e-6;
    let a_dac = config.area.a_dac_um2 * 1e-6;
    2.0 * config.clocking.f_clk_hz
        / (a_pixel / r_inv
            + a_dac / (r_inv * c_t * c_w / (c_t + c_w))
            + config.area.a_other_mm2 / (r_inv * c_t * c_w))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfReport {
    pub c_t: u64,
    pub c_w: u64,
    pub tasks_ops: u128,
    pub speed_ops_s: f64,
    pub speed_tops: f64,
    pub delay_s: f64,
    pub power_w: f64,
    pub power_efficiency_ops_s_w: f64,
    pub area_mm2: f64,
    pub area_efficiency_ops_s_mm2: f64,
    pub power_handling_w_mm2: f64,
    pub repeats: RepeatCounts,
    pub energy_per_pixel_cycle_j: EnergyBreakdown,
    pub power_breakdown_w: EnergyBreakdown,
    pub warnings: Vec<PerfWarning>,
}

pub fn evaluate(
    dims: &TransformerDims,
    config: &HardwareConfig,
    opts: &PerfOptions,
) -> Result<PerfReport> {
    let tasks_ops = total_mac_ops(dims)?;
    let delay = system_delay(dims, config)?;
    let speed = computing_speed(config);
    let power = system_power(dims, config, opts)?;
    let area = system_area(config);
    let mut warnings = delay.warnings.clone();
    if let Some(w) = power.dac_warning {
        warnings.push(PerfWarning::Dac(w));
    }
    Ok(PerfReport {
        c_t: config.geometry.rows,
        c_w: config.geometry.cols,
        tasks_ops,
        speed_ops_s: speed,
        speed_tops: speed / 1e12,
        delay_s: delay.seconds,
        power_w: power.power_w,
        power_efficiency_ops_s_w: 2.0
            / config.clocking.sub_cycles as f64
            / power.energy_per_pixel_cycle_j.total(),
        area_mm2: area,
        area_efficiency_ops_s_mm2: speed / area,
        power_handling_w_mm2: power.power_w / area,
        repeats: delay.repeats,
        energy_per_pixel_cycle_j: power.energy_per_pixel_cycle_j,
        power_breakdown_w: power.breakdown_w,
        warnings,
    })
}

/// One report per (C_T, C_W), row-major in `rows` then `cols`.
///
/// The column-DAC energy is re-evaluated at each C_T through the DAC model.
pub fn sweep(
    dims: &TransformerDims,
    template: &HardwareConfig,
    rows: &[u64],
    cols: &[u64],
    opts: &PerfOptions,
) -> Result<Vec<PerfReport>> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::Config("sweep ranges must be non-empty".into()));
    }
    let grid: Vec<(u64, u64)> = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect();
    grid.par_iter()
        .map(|&(c_t, c_w)| {
            let mut cfg = template.clone();
            cfg.geometry.rows = c_t;
            cfg.geometry.cols = c_w;
            evaluate(dims, &cfg, opts)
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: [&str; 10] = [
    "C_T",
    "C_W",
    "tasks_ops",
    "speed_ops_s",
    "delay_s",
    "power_w",
    "eff_ops_s_w",
    "area_mm2",
    "eff_ops_s_mm2",
    "handling_w_mm2",
];

impl PerfReport {
    pub fn sweep_csv_record(&self) -> [String; 10] {
        [
            self.c_t.to_string(),
            self.c_w.to_string(),
            self.tasks_ops.to_string(),
            self.speed_ops_s.to_string(),
            self.delay_s.to_string(),
            self.power_w.to_string(),
            self.power_efficiency_ops_s_w.to_string(),
            self.area_mm2.to_string(),
            self.area_efficiency_ops_s_mm2.to_string(),
            self.power_handling_w_mm2.to_string(),
        ]
    }
}

/// Published figures the reference preset is calibrated against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Targets {
    pub power_efficiency_ops_s_w: f64,
    pub area_mm2: f64,
}

impl Default for Table1Targets {
    fn default() -> Self {
        Self {
            power_efficiency_ops_s_w: 74e12,
            area_mm2: 654.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    /// Total energy per pixel-cycle implied by the efficiency target, J.
    pub lumped_energy_j: f64,
    /// E_DM + E_DAC|DM,eff/C_T, the part attributed to pixel and column DAC, J.
    pub pixel_plus_dac_j: f64,
    pub e_dm_j: f64,
    pub pixel_dac_per_pixel_j: f64,
    pub a_dac_um2: f64,
    pub a_other_mm2: f64,
    pub pixel_area_mm2: f64,
    pub config: HardwareConfig,
}

/// Back-solves E_DM and A_DAC so that the model reproduces `targets`.
///
/// The DAC model shape is kept; E_DM absorbs whatever per-cycle energy the
/// efficiency target leaves after every other term. A_DAC absorbs the area
/// left after the pixel array and `a_other_mm2`.
pub fn calibrate_table1(
    config: &HardwareConfig,
    dims: &TransformerDims,
    targets: &Table1Targets,
) -> Result<Calibration> {
    let opts = PerfOptions::default();
    let r = config.clocking.sub_cycles as f64;
    let lumped = 2.0 / (r * targets.power_efficiency_ops_s_w);

    let (per_cycle, _) = energy_per_pixel_cycle(dims, config, &opts)?;
    let others = per_cycle.total() - per_cycle.demodulator;
    let e_dm = lumped - others;
    if e_dm < 0.0 {
        return Err(Error::Config(format!(
            "efficiency target needs {lumped:e} J per pixel-cycle but the other terms already take {others:e} J"
        )));
    }

    let g = &config.geometry;
    let pixel_area_mm2 = g.pixel_area_um2() * 1e-6 * g.pixels() as f64;
    let residual = targets.area_mm2 - pixel_area_mm2 - config.area.a_other_mm2;
    if residual < 0.0 {
        return Err(Error::Config(format!(
            "area target {} mm² is below pixel array plus other area",
            targets.area_mm2
        )));
    }
    let a_dac_um2 = residual / (g.rows + g.cols) as f64 * 1e6;

    let mut calibrated = config.clone();
    calibrated.energy.e_dm_j = e_dm;
    calibrated.area.a_dac_um2 = a_dac_um2;
    calibrated.provenance = Some(format!(
        "derived: energy.e_dm_j and area.a_dac_um2 back-solved at {}x{} from {} ops/s/W and {} mm2; not measured values",
        g.rows, g.cols, targets.power_efficiency_ops_s_w, targets.area_mm2
    ));

    Ok(Calibration {
        lumped_energy_j: lumped,
        pixel_plus_dac_j: e_dm + per_cycle.pixel_dac,
        e_dm_j: e_dm,
        pixel_dac_per_pixel_j: per_cycle.pixel_dac,
        a_dac_um2,
        a_other_mm2: config.area.a_other_mm2,
        pixel_area_mm2,
        config: calibrated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub system: String,
    pub task_to: f64,
    pub speed_tops: f64,
    pub power_efficiency_tops_w: f64,
    pub area_efficiency_tops_mm2: f64,
    pub delay_ms: f64,
    pub power_w: f64,
    pub area_mm2: f64,
    pub power_handling_mw_mm2: f64,
}

/// Published figures for one Nvidia T4 running the same workload.
pub const T4_SINGLE: ComparisonConstants = ComparisonConstants {
    task_to: 712.0,
    speed_tops: 130.0,
    power_efficiency_tops_w: 0.32,
    area_efficiency_tops_mm2: 0.24,
    delay_ms: 5477.0,
    power_w: 406.25,
    area_mm2: 541.66,
    power_handling_mw_mm2: 750.0,
};

/// One hundred T4 units clustered.
pub const T4_HUNDRED: ComparisonConstants = ComparisonConstants {
    task_to: 712.0,
    speed_tops: 13000.0,
    power_efficiency_tops_w: 0.32,
    area_efficiency_tops_mm2: 0.24,
    delay_ms: 54.77,
    power_w: 40625.0,
    area_mm2: 54166.0,
    power_handling_mw_mm2: 750.0,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonConstants {
    pub task_to: f64,
    pub speed_tops: f64,
    pub power_efficiency_tops_w: f64,
    pub area_efficiency_tops_mm2: f64,
    pub delay_ms: f64,
    pub power_w: f64,
    pub area_mm2: f64,
    pub power_handling_mw_mm2: f64,
}

impl ComparisonConstants {
    fn row(&self, system: &str) -> ComparisonRow {
        ComparisonRow {
            system: system.to_string(),
            task_to: self.task_to,
            speed_tops: self.speed_tops,
            power_efficiency_tops_w: self.power_efficiency_tops_w,
            area_efficiency_tops_mm2: self.area_efficiency_tops_mm2,
            delay_ms: self.delay_ms,
            power_w: self.power_w,
            area_mm2: self.area_mm2,
            power_handling_mw_mm2: self.power_handling_mw_mm2,
        }
    }
}

pub fn compare_table1(report: &PerfReport) -> Vec<ComparisonRow> {
    vec![
        ComparisonRow {
            system: format!("OEN {}x{}", report.c_t, report.c_w),
            task_to: report.tasks_ops as f64 / 1e12,
            speed_tops: report.speed_ops_s / 1e12,
            power_efficiency_tops_w: report.power_efficiency_ops_s_w / 1e12,
            area_efficiency_tops_mm2: report.area_efficiency_ops_s_mm2 / 1e12,
            delay_ms: report.delay_s * 1e3,
            power_w: report.power_w,
            area_mm2: report.area_mm2,
            power_handling_mw_mm2: report.power_handling_w_mm2 * 1e3,
        },
        T4_HUNDRED.row("Nvidia T4 x100"),
        T4_SINGLE.row("Nvidia T4 x1"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gpt3() -> TransformerDims {
        TransformerDims::gpt3()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn table1_speed() {
        let s = computing_speed(&HardwareConfig::table1());
        assert_eq!(s, 2.0 * 2e9 / 2.0 * 2048.0 * 3072.0);
        assert_eq!((s / 1e12).round(), 12583.0);
    }

    #[test]
    fn speed_scales() {
        let mut c = HardwareConfig::table1();
        let s2 = computing_speed(&c);
        c.clocking.sub_cycles = 1;
        assert_eq!(computing_speed(&c), 2.0 * s2);
        c.geometry.rows = 1;
        c.geometry.cols = 1;
        c.clocking.f_clk_hz = 1.0;
        assert_eq!(computing_speed(&c), 2.0);
    }

    #[test]
    fn table1_delay() {
        let d = system_delay(&gpt3(), &HardwareConfig::table1()).unwrap();
        assert!((d.seconds - 0.0566).abs() < 1e-4, "{}", d.seconds);
        assert!(rel(d.seconds, d.closed_form_seconds.unwrap()) < 1e-12);
        assert_eq!(
            d.repeats,
            RepeatCounts {
                r_t: 1,
                r_w_qkv: 12,
                r_w_output: 4,
                r_w_up: 16,
                r_w_down: 4
            }
        );
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn doubling_columns_halves_delay() {
        let mut c = HardwareConfig::table1();
        let d1 = system_delay(&gpt3(), &c).unwrap().seconds;
        c.geometry.cols *= 2;
        let d2 = system_delay(&gpt3(), &c).unwrap().seconds;
        assert!(rel(d1 / d2, 2.0) < 1e-12);
    }

    #[test]
    fn speed_times_delay_is_tasks() {
        let c = HardwareConfig::table1();
        let d = system_delay(&gpt3(), &c).unwrap().seconds;
        let n = total_mac_ops(&gpt3()).unwrap() as f64;
        assert!(rel(computing_speed(&c) * d, n) < 1e-3);
    }

    #[test]
    fn oversized_array_flags_idle_rows() {
        let dims = TransformerDims {
            tokens: 4,
            layers: 1,
            heads: 2,
            head_dim: 2,
            embed_dim: 4,
            ff_dim: 8,
        };
        let mut c = HardwareConfig::table1();
        c.geometry.rows = 8;
        c.geometry.cols = 3;
        let d = system_delay(&dims, &c).unwrap();
        assert_eq!(d.repeats.r_t, 1);
        assert!(d.warnings.contains(&PerfWarning::IdleRows));
        assert!(d.warnings.contains(&PerfWarning::IdleColumns));
    }

    #[test]
    fn calibrated_table1_matches_published() {
        let r = evaluate(&gpt3(), &HardwareConfig::table1(), &PerfOptions::default()).unwrap();
        assert!(rel(r.power_efficiency_ops_s_w, 74e12) < 1e-9);
        assert!(rel(r.power_w, 172.0) < 0.02, "{}", r.power_w);
        assert!(rel(r.area_mm2, 654.0) < 1e-9);
        assert!(rel(r.area_efficiency_ops_s_mm2, 19e12) < 0.02);
        assert!(rel(r.power_handling_w_mm2, 0.262) < 0.03);
    }

    #[test]
    fn calibration_splits_energy_sensibly() {
        let cal = calibrate_table1(
            &HardwareConfig::table1_uncalibrated(),
            &gpt3(),
            &Table1Targets::default(),
        )
        .unwrap();
        assert!(rel(cal.lumped_energy_j, 13.5e-15) < 0.01);
        assert!(cal.e_dm_j > 0.0 && cal.e_dm_j < cal.pixel_dac_per_pixel_j);
        assert!(rel(cal.pixel_area_mm2, 629.1456) < 1e-9);
        assert!(rel(cal.a_dac_um2, (654.0 - 629.1456) / 5120.0 * 1e6) < 1e-9);
    }

    #[test]
    fn zero_energy_zero_power() {
        let mut c = HardwareConfig::table1();
        c.energy = crate::hardware::EnergyParams {
            e_read_j: 0.0,
            e_write_j: 0.0,
            e_dm_j: 0.0,
            e_adc_j: 0.0,
            idac_opt_factor: 1.0,
        };
        c.dac.pixel.e_fixed_j = 0.0;
        c.dac.pixel.e_per_pixel_j = 0.0;
        let opts = PerfOptions {
            power_form: PowerForm::LargeN,
            ..Default::default()
        };
        assert_eq!(system_power(&gpt3(), &c, &opts).unwrap().power_w, 0.0);
    }

    #[test]
    fn breakdown_partitions_power() {
        for exclude_hbm in [true, false] {
            let opts = PerfOptions {
                exclude_hbm,
                power_form: PowerForm::Full,
            };
            let p = system_power(&gpt3(), &HardwareConfig::table1(), &opts).unwrap();
            assert_eq!(p.breakdown_w.total(), p.power_w);
        }
    }

    #[test]
    fn closed_form_efficiency_close_to_full() {
        let c = HardwareConfig::table1();
        let full = power_efficiency(&gpt3(), &c, &PerfOptions::default()).unwrap();
        let closed = power_efficiency_closed_form(&c, true).unwrap();
        assert!(rel(full, closed) < 0.01, "{full} vs {closed}");
        let large_n = PerfOptions {
            power_form: PowerForm::LargeN,
            ..Default::default()
        };
        assert!(rel(power_efficiency(&gpt3(), &c, &large_n).unwrap(), closed) < 1e-12);
    }

    #[test]
    fn efficiency_limit_is_demodulator_bound() {
        let mut c = HardwareConfig::table1();
        c.geometry.rows = 1_000_000_000;
        // The column DAC load grows with the pixels it drives, so its
        // per-pixel share tends to e_per_pixel rather than zero.
        let dac_floor = c.dac.pixel.e_per_pixel_j / c.energy.idac_opt_factor;
        let limit = 2.0 / 2.0 / (c.energy.e_dm_j + dac_floor);
        assert!(rel(power_efficiency_closed_form(&c, true).unwrap(), limit) < 1e-3);
        c.dac.pixel.e_per_pixel_j = 0.0;
        let limit = 2.0 / 2.0 / c.energy.e_dm_j;
        assert!(rel(power_efficiency_closed_form(&c, true).unwrap(), limit) < 1e-3);
    }

    #[test]
    fn efficiency_times_power_is_speed() {
        let c = HardwareConfig::table1();
        for opts in [
            PerfOptions::default(),
            PerfOptions {
                exclude_hbm: false,
                power_form: PowerForm::LargeN,
            },
        ] {
            let r = evaluate(&gpt3(), &c, &opts).unwrap();
            assert!(rel(r.power_efficiency_ops_s_w * r.power_w, r.speed_ops_s) < 1e-12);
        }
    }

    #[test]
    fn efficiency_independent_of_clock_large_n() {
        let mut c = HardwareConfig::table1();
        let opts = PerfOptions {
            power_form: PowerForm::LargeN,
            ..Default::default()
        };
        let a = power_efficiency(&gpt3(), &c, &opts).unwrap();
        c.clocking.f_clk_hz = 0.7e9;
        assert_eq!(power_efficiency(&gpt3(), &c, &opts).unwrap(), a);
    }

    #[test]
    fn pixel_area_term() {
        let mut c = HardwareConfig::table1();
        c.area.a_dac_um2 = 0.0;
        c.area.a_other_mm2 = 0.0;
        assert!(rel(system_area(&c), 629.1456) < 1e-12);
    }

    #[test]
    fn area_efficiency_identity() {
        for cfg in [HardwareConfig::table1(), HardwareConfig::budget()] {
            let mut c = cfg.clone();
            c.area.a_other_mm2 = 12.5;
            let eta = area_efficiency(&c);
            assert!(rel(eta * system_area(&c), computing_speed(&c)) < 1e-12);
        }
        assert!(rel(area_efficiency(&HardwareConfig::table1()), 19e12) < 0.02);
    }

    #[test]
    fn area_efficiency_pixel_limit() {
        let mut c = HardwareConfig::table1();
        c.area.a_other_mm2 = 100.0;
        c.geometry.rows = 10_000_000;
        c.geometry.cols = 10_000_000;
        let limit = 2.0 * c.clocking.f_clk_hz
            / c.clocking.sub_cycles as f64
            / (c.geometry.pixel_area_um2() * 1e-6);
        assert!(rel(area_efficiency(&c), limit) < 1e-2);
    }

    #[test]
    fn single_point_sweep_matches_evaluate() {
        let c = HardwareConfig::table1();
        let grid = sweep(&gpt3(), &c, &[2048], &[3072], &PerfOptions::default()).unwrap();
        assert_eq!(grid.len(), 1);
        assert_eq!(
            grid[0],
            evaluate(&gpt3(), &c, &PerfOptions::default()).unwrap()
        );
    }

    #[test]
    fn sweep_order_is_row_major() {
        let grid = sweep(
            &gpt3(),
            &HardwareConfig::table1(),
            &[256, 512],
            &[384, 768, 1536],
            &PerfOptions::default(),
        )
        .unwrap();
        let order: Vec<_> = grid.iter().map(|r| (r.c_t, r.c_w)).collect();
        assert_eq!(
            order,
            vec![
                (256, 384),
                (256, 768),
                (256, 1536),
                (512, 384),
                (512, 768),
                (512, 1536)
            ]
        );
        assert!(sweep(
            &gpt3(),
            &HardwareConfig::table1(),
            &[],
            &[1],
            &PerfOptions::default()
        )
        .is_err());
    }

    #[test]
    fn comparison_rows() {
        let r = evaluate(&gpt3(), &HardwareConfig::table1(), &PerfOptions::default()).unwrap();
        let rows = compare_table1(&r);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].speed_tops, 13000.0);
        assert_eq!(rows[2].delay_ms, 5477.0);
        assert_eq!(rows[1].delay_ms, 54.77);
        let ratio = rows[0].power_efficiency_tops_w / rows[2].power_efficiency_tops_w;
        assert!((ratio - 231.25).abs() < 0.5, "{ratio}");
    }
}
