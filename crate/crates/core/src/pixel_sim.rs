// SPDX-License-Identifier: Apache-2.0

//! Charge-level model of a two-tap demodulator pixel used as a MAC unit.
//!
//! An input x ∈ [−1, 1] is carried by the photo-response R = (x+1)/2 and a
//! weight w by the gate control C = (w+1)/2. In the bipolar complementary
//! sequence (r = 2) the pixel collects
//!
//! ```text
//! sub-cycle 1:  R·C         → tap+    R·(1−C)      → tap−
//! sub-cycle 2:  (1−R)·(1−C) → tap+    (1−R)·C      → tap−
//! ```
//!
//! so that q₊ − q₋ ∝ (2R−1)(2C−1) = x·w. The symmetrized sequence (r = 4)
//! runs the same pair a second time with the taps exchanged into a second
//! pair of accumulators; the combined differential `(D₁ − D₂)/2` removes the
//! tap-gain bias and common-mode dark charge exactly. Unipolar mode (r = 1)
//! reads Σ R·C from tap+ alone and cannot represent negative products.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::Serialize;

use crate::constants::ELECTRON_CHARGE;
use crate::energy_snr::min_pulse_energy;
use crate::error::{Error, Result};
use crate::hardware::{ClockingParams, OpticalParams};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceMode {
    UnipolarSingle,
    BipolarComplementary,
    SymmetrizedBipolar,
}

impl SequenceMode {
    pub fn from_sub_cycles(r: u32) -> Result<Self> {
        match r {
            1 => Ok(Self::UnipolarSingle),
            2 => Ok(Self::BipolarComplementary),
            4 => Ok(Self::SymmetrizedBipolar),
            _ => Err(Error::Domain(format!(
                "sub-cycle count {r} is not one of 1, 2, 4"
            ))),
        }
    }

    pub fn sub_cycles(self) -> u32 {
        match self {
            Self::UnipolarSingle => 1,
            Self::BipolarComplementary => 2,
            Self::SymmetrizedBipolar => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveSample {
    /// Photo-response R ∈ [0, 1].
    pub r: f64,
    /// Gate control C ∈ [0, 1].
    pub c: f64,
}

/// Maps values into the [0, 1] drive domain, clipping and counting
/// out-of-range inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Encoder {
    pub clipped: usize,
}

impl Encoder {
    fn encode(&mut self, v: f64) -> Result<f64> {
        if v.is_nan() {
            return Err(Error::Domain("cannot encode NaN".into()));
        }
        let c = if v.abs() > 1.0 {
            self.clipped += 1;
            v.clamp(-1.0, 1.0)
        } else {
            v
        };
        Ok((c + 1.0) / 2.0)
    }

    pub fn encode_input(&mut self, x: f64) -> Result<f64> {
        self.encode(x)
    }

    pub fn encode_weight(&mut self, w: f64) -> Result<f64> {
        self.encode(w)
    }

    pub fn sample(&mut self, x: f64, w: f64) -> Result<DriveSample> {
        Ok(DriveSample {
            r: self.encode_input(x)?,
            c: self.encode_weight(w)?,
        })
    }
}

/// Inverse of the encoding: 2v − 1.
pub fn decode(v: f64) -> f64 {
    2.0 * v - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PixelParams {
    pub tap_gain_plus: f64,
    pub tap_gain_minus: f64,
    pub full_well_e: f64,
    pub pixel_capacitance_f: f64,
    pub reset_reference_v: f64,
    /// Gaussian read noise per tap, electrons rms. Off by default.
    pub read_noise_e: f64,
}

impl PixelParams {
    pub fn from_optics(optics: &OpticalParams) -> Self {
        Self {
            tap_gain_plus: optics.tap_gain_plus,
            tap_gain_minus: optics.tap_gain_minus,
            full_well_e: optics.full_well_e,
            pixel_capacitance_f: optics.pixel_capacitance_f,
            reset_reference_v: 0.0,
            read_noise_e: 0.0,
        }
    }

    pub fn mean_gain(&self) -> f64 {
        0.5 * (self.tap_gain_plus + self.tap_gain_minus)
    }
}

/// Per-element photoelectrons at full response and dark electrons per
/// sub-cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PixelDrive {
    /// Mean photoelectrons from one element in one sub-cycle at R = 1.
    pub electrons_per_unit: f64,
    pub dark_electrons_per_sub_cycle: f64,
}

impl PixelDrive {
    /// `peak_energy_j` is the emitter pulse energy per element at R = 1.
    pub fn from_energy(
        optics: &OpticalParams,
        clocking: &ClockingParams,
        peak_energy_j: f64,
    ) -> Self {
        Self {
            electrons_per_unit: optics.eta_dm * optics.eta_em * peak_energy_j
                / optics.photon_energy(),
            dark_electrons_per_sub_cycle: optics.dark_current_a
                / (ELECTRON_CHARGE * clocking.f_clk_hz),
        }
    }

    /// Drive at the SNR bound for vectors of length `n_vec`: the peak is twice
    /// the average pulse energy.
    pub fn at_snr_bound(
        optics: &OpticalParams,
        clocking: &ClockingParams,
        n_vec: u64,
    ) -> Result<Self> {
        let e_u = min_pulse_energy(optics, clocking, n_vec)?.e_u_j;
        Ok(Self::from_energy(optics, clocking, 2.0 * e_u))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PixelState {
    pub q_plus: f64,
    pub q_minus: f64,
    /// Second accumulator pair, used only by the symmetrized sequence.
    pub q_plus_swapped: f64,
    pub q_minus_swapped: f64,
    pub saturated: bool,
    pub params: PixelParams,
    /// Running rounding error of each tap sum, in tap order.
    #[serde(skip)]
    residual: [f64; 4],
}

impl PixelState {
    pub fn new(params: PixelParams) -> Self {
        Self {
            q_plus: 0.0,
            q_minus: 0.0,
            q_plus_swapped: 0.0,
            q_minus_swapped: 0.0,
            saturated: false,
            params,
            residual: [0.0; 4],
        }
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.params);
    }

    /// Signal charge in electrons: q₊ for r = 1, q₊ − q₋ for r = 2 and the
    /// combined differential for r = 4.
    pub fn signal_electrons(&self, mode: SequenceMode) -> f64 {
        let r = &self.residual;
        let d1 = (self.q_plus - self.q_minus) + (r[0] - r[1]);
        match mode {
            SequenceMode::UnipolarSingle => self.q_plus + r[0],
            SequenceMode::BipolarComplementary => d1,
            SequenceMode::SymmetrizedBipolar => {
                0.5 * (d1 - ((self.q_plus_swapped - self.q_minus_swapped) + (r[2] - r[3])))
            }
        }
    }

    /// Total electrons collected over all taps.
    pub fn total_electrons(&self) -> f64 {
        self.q_plus + self.q_minus + self.q_plus_swapped + self.q_minus_swapped
    }
}

/// Electrons of signal per unit of Σx·w (or Σ R·C for r = 1).
pub fn signal_gain(mode: SequenceMode, params: &PixelParams, drive: &PixelDrive) -> f64 {
    match mode {
        SequenceMode::UnipolarSingle => params.tap_gain_plus * drive.electrons_per_unit,
        SequenceMode::BipolarComplementary | SequenceMode::SymmetrizedBipolar => {
            params.mean_gain() * drive.electrons_per_unit
        }
    }
}

#[derive(Clone, Copy)]
enum Tap {
    Plus,
    Minus,
    PlusSwapped,
    MinusSwapped,
}

struct Collector<'a> {
    state: &'a mut PixelState,
    drive: &'a PixelDrive,
    rng: Option<&'a mut ChaCha8Rng>,
}

impl Collector<'_> {
    fn draw(&mut self, mean: f64) -> f64 {
        match self.rng.as_deref_mut() {
            None => mean,
            Some(_) if mean <= 0.0 => 0.0,
            Some(rng) => Poisson::new(mean)
                .expect("positive finite mean")
                .sample(rng),
        }
    }

    fn collect(&mut self, tap: Tap, fraction: f64) {
        let gain = match tap {
            Tap::Plus | Tap::PlusSwapped => self.state.params.tap_gain_plus,
            Tap::Minus | Tap::MinusSwapped => self.state.params.tap_gain_minus,
        };
        let photo = self.draw(self.drive.electrons_per_unit * fraction);
        let dark = self.draw(self.drive.dark_electrons_per_sub_cycle);
        let full_well = self.state.params.full_well_e;
        let st = &mut *self.state;
        let (q, res) = match tap {
            Tap::Plus => (&mut st.q_plus, &mut st.residual[0]),
            Tap::Minus => (&mut st.q_minus, &mut st.residual[1]),
            Tap::PlusSwapped => (&mut st.q_plus_swapped, &mut st.residual[2]),
            Tap::MinusSwapped => (&mut st.q_minus_swapped, &mut st.residual[3]),
        };
        // Compensated sum, so long noiseless vectors stay exact to a few ulps.
        for v in [gain * photo, dark] {
            let t = *q + v;
            *res += if q.abs() >= v.abs() {
                (*q - t) + v
            } else {
                (v - t) + *q
            };
            *q = t;
        }
        if *q + *res > full_well {
            *q = full_well;
            *res = 0.0;
            st.saturated = true;
        }
    }

    fn bipolar_pair(&mut self, s: &DriveSample, plus: Tap, minus: Tap) {
        self.collect(plus, s.r * s.c);
        self.collect(minus, s.r * (1.0 - s.c));
        self.collect(plus, (1.0 - s.r) * (1.0 - s.c));
        self.collect(minus, (1.0 - s.r) * s.c);
    }
}

fn check_samples(inputs: &[DriveSample]) -> Result<()> {
    for (k, s) in inputs.iter().enumerate() {
        if !(0.0..=1.0).contains(&s.r) || !(0.0..=1.0).contains(&s.c) {
            return Err(Error::Domain(format!(
                "drive sample {k} has R = {}, C = {} outside [0, 1]",
                s.r, s.c
            )));
        }
    }
    Ok(())
}

/// Integrates one vector of drive samples into `state`.
///
/// With `rng` set, photo and dark charge are Poisson-sampled per element,
/// sub-cycle and tap; otherwise mean values are used.
pub fn accumulate(
    state: &mut PixelState,
    inputs: &[DriveSample],
    mode: SequenceMode,
    drive: &PixelDrive,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<()> {
    check_samples(inputs)?;
    let read_noise = state.params.read_noise_e;
    {
        let mut col = Collector {
            state,
            drive,
            rng: rng.as_deref_mut(),
        };
        for s in inputs {
            match mode {
                SequenceMode::UnipolarSingle => {
                    col.collect(Tap::Plus, s.r * s.c);
                    col.collect(Tap::Minus, s.r * (1.0 - s.c));
                }
                SequenceMode::BipolarComplementary => col.bipolar_pair(s, Tap::Plus, Tap::Minus),
                SequenceMode::SymmetrizedBipolar => {
                    col.bipolar_pair(s, Tap::Plus, Tap::Minus);
                    col.bipolar_pair(s, Tap::MinusSwapped, Tap::PlusSwapped);
                }
            }
        }
    }
    if let (Some(rng), true) = (rng, read_noise > 0.0) {
        let n = Normal::new(0.0, read_noise).map_err(|e| Error::Domain(e.to_string()))?;
        for q in [
            &mut state.q_plus,
            &mut state.q_minus,
            &mut state.q_plus_swapped,
            &mut state.q_minus_swapped,
        ] {
            *q = (*q + n.sample(rng)).max(0.0);
        }
        state.residual = [0.0; 4];
    }
    Ok(())
}

/// [`accumulate`] with a reproducible stream for (`seed`, `pixel`, `trial`).
pub fn accumulate_seeded(
    state: &mut PixelState,
    inputs: &[DriveSample],
    mode: SequenceMode,
    drive: &PixelDrive,
    seed: u64,
    pixel: u64,
    trial: u64,
) -> Result<()> {
    let mut rng = stream_rng(seed, pixel, trial);
    accumulate(state, inputs, mode, drive, Some(&mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Readout {
    pub code: i64,
    /// Dequantized voltage, V.
    pub value_v: f64,
    /// Voltage before quantization, V.
    pub analog_v: f64,
    pub lsb_v: f64,
    pub overflow: bool,
}

/// Mid-tread quantizer with 2^b − 1 symmetric levels spanning ±`full_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantizer {
    pub bits: u32,
    pub full_scale: f64,
}

impl Quantizer {
    pub fn new(bits: u32, full_scale: f64) -> Result<Self> {
        if !(1..=62).contains(&bits) {
            return Err(Error::Domain(format!("ADC bits {bits} outside 1..=62")));
        }
        if !(full_scale > 0.0 && full_scale.is_finite()) {
            return Err(Error::Domain(format!(
                "ADC full scale {full_scale} must be positive"
            )));
        }
        Ok(Self { bits, full_scale })
    }

    fn max_code(&self) -> i64 {
        (1i64 << (self.bits - 1)) - 1
    }

    pub fn lsb(&self) -> f64 {
        // A 1-bit converter keeps a single nonzero level.
        self.full_scale / self.max_code().max(1) as f64
    }

    /// (code, overflow)
    pub fn quantize(&self, v: f64) -> (i64, bool) {
        let lo = -(1i64 << (self.bits - 1));
        let hi = self.max_code();
        let raw = (v / self.lsb()).round();
        if raw > hi as f64 {
            (hi, true)
        } else if raw < lo as f64 {
            (lo, true)
        } else {
            (raw as i64, false)
        }
    }

    pub fn dequantize(&self, code: i64) -> f64 {
        code as f64 * self.lsb()
    }
}

/// Converts the signal charge to a voltage over C_pix and digitizes it.
pub fn readout(
    state: &PixelState,
    mode: SequenceMode,
    adc_bits: u32,
    full_scale_v: f64,
) -> Result<Readout> {
    let quant = Quantizer::new(adc_bits, full_scale_v)?;
    let analog_v =
        ELECTRON_CHARGE * state.signal_electrons(mode) / state.params.pixel_capacitance_f;
    let (code, overflow) = quant.quantize(analog_v);
    Ok(Readout {
        code,
        value_v: quant.dequantize(code),
        analog_v,
        lsb_v: quant.lsb(),
        overflow,
    })
}

/// Σ x·w with error-free products and compensated summation.
pub fn mac_exact(x: &[f64], w: &[f64]) -> Result<f64> {
    if x.len() != w.len() {
        return Err(Error::Shape(format!(
            "vector lengths {} and {} differ",
            x.len(),
            w.len()
        )));
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut add = |v: f64| {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    };
    for (a, b) in x.iter().zip(w) {
        let p = a * b;
        let e = a.mul_add(*b, -p);
        add(p);
        add(e);
    }
    Ok(sum + comp)
}

/// Draws a uniform value in [−1, 1].
pub fn uniform_signed<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-1.0..=1.0)
}
