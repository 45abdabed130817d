// SPDX-License-Identifier: Apache-2.0

//! Minimum emitter pulse energy from the shot-noise vs. quantization bound.
//!
//! The analog readout is considered good enough when the quantization error
//! of the differential charge is at least as large as its shot noise:
//!
//! ```text
//! (I_max − I_min)·α·T / q          ( (I_avg·α + I_dark)·T )^½
//! ------------------------   ≥     ( -------------------- )
//!      √12 · (2^b − 1)             (          q           )
//! ```
//!
//! With `I_max − I_min = 2·I_avg`, `T = N·r/f_clk` and the average photocurrent
//! tied to the pulse energy by `I_avg·α = (q/ħω)·η_DM·η_EM·E_u·f_clk`, the
//! bound becomes a quadratic in the signal electron count whose positive
//! root is [`MinPulseEnergy::e_u_j`]. The two textbook limits (dark current
//! negligible / dominant) are reported alongside as `epsilon·delta`.

use serde::Serialize;

use crate::constants::ELECTRON_CHARGE;
use crate::error::{Error, Result};
use crate::hardware::{ClockingParams, OpticalParams};

/// Relative upward nudge applied to the exact root so that rounding never
/// leaves the bound a few ulps short.
const ROUNDING_GUARD: f64 = 1e-12;

/// Band around I_th, as a ratio, inside which neither limit is trusted.
pub const CROSSOVER_BAND: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrOperatingPoint {
    pub t_expo_s: f64,
    pub n_vec: u64,
    pub sub_cycles: u32,
    pub adc_bits: u32,
    pub i_avg_a: f64,
    pub i_max_a: f64,
    pub i_min_a: f64,
    pub i_dark_a: f64,
    pub duty_cycle: f64,
}

impl SnrOperatingPoint {
    /// Operating point reached when every element is driven with pulse energy `e_u_j`.
    pub fn from_pulse_energy(
        optics: &OpticalParams,
        clocking: &ClockingParams,
        n_vec: u64,
        e_u_j: f64,
    ) -> Self {
        let f = clocking.f_clk_hz;
        let t_expo_s = exposure_time(clocking, n_vec);
        let hw = optics.photon_energy();
        // Written as in the derivation: the exposure time cancels.
        let i_avg_alpha =
            ELECTRON_CHARGE / hw * optics.eta_dm * optics.eta_em * (e_u_j * f * t_expo_s)
                / t_expo_s;
        let i_avg_a = i_avg_alpha / optics.emitter_duty_cycle;
        Self {
            t_expo_s,
            n_vec,
            sub_cycles: clocking.sub_cycles,
            adc_bits: clocking.adc_bits,
            i_avg_a,
            i_max_a: 2.0 * i_avg_a,
            i_min_a: 0.0,
            i_dark_a: optics.dark_current_a,
            duty_cycle: optics.emitter_duty_cycle,
        }
    }
}

/// Exposure (illumination) time N·r/f_clk.
pub fn exposure_time(clocking: &ClockingParams, n_vec: u64) -> f64 {
    n_vec as f64 * clocking.sub_cycles as f64 / clocking.f_clk_hz
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrCheck {
    pub holds: bool,
    /// Quantization-error side, electrons.
    pub lhs: f64,
    /// Shot-noise side, electrons.
    pub rhs: f64,
    /// lhs/rhs; 1 when both sides vanish.
    pub ratio: f64,
}

pub fn snr_condition_holds(op: &SnrOperatingPoint) -> Result<SnrCheck> {
    if !(op.t_expo_s > 0.0) {
        return Err(Error::Domain(format!(
            "exposure time must be > 0, got {}",
            op.t_expo_s
        )));
    }
    let steps = (2f64).powi(op.adc_bits as i32) - 1.0;
    let lhs = (op.i_max_a - op.i_min_a) * op.duty_cycle * op.t_expo_s
        / ELECTRON_CHARGE
        / (12f64.sqrt() * steps);
    let rhs = ((op.i_avg_a * op.duty_cycle + op.i_dark_a) * op.t_expo_s / ELECTRON_CHARGE).sqrt();
    let ratio = if rhs == 0.0 {
        if lhs == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    };
    Ok(SnrCheck {
        holds: lhs >= rhs,
        lhs,
        rhs,
        ratio,
    })
}

/// I_th = 3q(2^b − 1)² / (4·f_clk⁻¹·N·r).
pub fn threshold_dark_current(clocking: &ClockingParams, n_vec: u64) -> f64 {
    let steps = clocking.adc_steps();
    3.0 * ELECTRON_CHARGE * steps * steps
        / (4.0 * clocking.f_clk_hz.recip() * n_vec as f64 * clocking.sub_cycles as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DarkRegime {
    DarkNegligible,
    DarkDominated,
    /// I_dark within a factor [`CROSSOVER_BAND`] of I_th.
    Crossover,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinPulseEnergy {
    /// Smallest pulse energy satisfying the bound exactly, J.
    pub e_u_j: f64,
    pub regime: DarkRegime,
    /// Limit-case prefactor, J.
    pub epsilon_j: f64,
    pub delta: f64,
    /// epsilon·delta of the selected limit (larger branch in the crossover band), J.
    pub e_u_limit_j: f64,
    pub i_th_a: f64,
}

fn branch_dark_negligible(
    optics: &OpticalParams,
    clocking: &ClockingParams,
    n_vec: u64,
) -> (f64, f64) {
    let steps = clocking.adc_steps();
    let eps = 3.0 * optics.photon_energy() / (optics.eta_dm * optics.eta_em) * steps * steps;
    let delta = 1.0 / (n_vec as f64 * clocking.sub_cycles as f64);
    (eps, delta)
}

fn branch_dark_dominated(
    optics: &OpticalParams,
    clocking: &ClockingParams,
    n_vec: u64,
) -> (f64, f64) {
    let steps = clocking.adc_steps();
    let eps = 3.0 * optics.photon_energy() / (optics.eta_dm * optics.eta_em)
        * (optics.dark_current_a / (3.0 * ELECTRON_CHARGE * clocking.f_clk_hz)).sqrt()
        * steps;
    let delta = 1.0 / (n_vec as f64 * clocking.sub_cycles as f64).sqrt();
    (eps, delta)
}

pub fn min_pulse_energy(
    optics: &OpticalParams,
    clocking: &ClockingParams,
    n_vec: u64,
) -> Result<MinPulseEnergy> {
    if n_vec == 0 {
        return Err(Error::Domain("vector length must be >= 1".into()));
    }
    let i_th_a = threshold_dark_current(clocking, n_vec);
    let neg = branch_dark_negligible(optics, clocking, n_vec);
    let dom = branch_dark_dominated(optics, clocking, n_vec);
    let ratio = optics.dark_current_a / i_th_a;
    let (regime, (epsilon_j, delta)) = if ratio < 1.0 / CROSSOVER_BAND {
        (DarkRegime::DarkNegligible, neg)
    } else if ratio > CROSSOVER_BAND {
        (DarkRegime::DarkDominated, dom)
    } else if neg.0 * neg.1 >= dom.0 * dom.1 {
        (DarkRegime::Crossover, neg)
    } else {
        (DarkRegime::Crossover, dom)
    };

    // Signal electrons a and dark electrons d over the exposure:
    // 2a/(√12·K) = √(a + d)  ⇔  a² − 3K²·a − 3K²·d = 0.
    let k = clocking.adc_steps();
    let nr = n_vec as f64 * clocking.sub_cycles as f64;
    let dark_e = optics.dark_current_a * exposure_time(clocking, n_vec) / ELECTRON_CHARGE;
    let three_k2 = 3.0 * k * k;
    let signal_e = 0.5 * (three_k2 + (three_k2 * three_k2 + 4.0 * three_k2 * dark_e).sqrt());
    let e_u_j = signal_e * optics.photon_energy() / (optics.eta_dm * optics.eta_em * nr)
        * (1.0 + ROUNDING_GUARD);

    Ok(MinPulseEnergy {
        e_u_j,
        regime,
        epsilon_j,
        delta,
        e_u_limit_j: epsilon_j * delta,
        i_th_a,
    })
}
