// SPDX-License-Identifier: Apache-2.0

//! Tiling of weight products onto the C_T×C_W array, with cycle-accounted
//! timing and three execution fidelities.
//!
//! Shapes follow the hardware orientation: inputs `X` are `in_dim × batch`
//! (one column per token), weights `W` are `out_dim × in_dim` and the result
//! is `Y = W·X`. Array rows hold tokens, array columns hold weight rows.

use std::ops::Range;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::HardwareConfig;
use crate::perf_analytics::system_delay;
use crate::pixel_sim::{
    accumulate, signal_gain, DriveSample, PixelDrive, PixelParams, PixelState, Quantizer,
    SequenceMode,
};
use crate::rng::stream_rng;
use crate::workload::{workload_plan, TransformerDims, VmmKind, VmmShape};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Tile {
    pub repeat_t: u64,
    pub repeat_w: u64,
    /// Tokens (columns of X) on the array rows.
    pub batch: Range<u64>,
    /// Weight rows (rows of W) on the array columns.
    pub out: Range<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TileSchedule {
    pub shape: VmmShape,
    pub c_t: u64,
    pub c_w: u64,
    pub r_t: u64,
    pub r_w: u64,
    /// Row-major: token repeat outer, weight repeat inner.
    pub tiles: Vec<Tile>,
    pub illumination_cycles: u64,
    pub illumination_s: f64,
    pub adc_readout_s: f64,
    pub reset_s: f64,
}

impl TileSchedule {
    pub fn repeats(&self) -> u64 {
        self.r_t * self.r_w
    }
}

pub fn plan(shape: VmmShape, config: &HardwareConfig, reset_s: f64) -> Result<TileSchedule> {
    let g = &config.geometry;
    let c = &config.clocking;
    if g.rows == 0 || g.cols == 0 {
        return Err(Error::Config(
            "array needs at least one row and column".into(),
        ));
    }
    if !(reset_s >= 0.0) {
        return Err(Error::Config(format!("reset time {reset_s} must be >= 0")));
    }
    let r_t = shape.batch.div_ceil(g.rows);
    let r_w = shape.out_dim.div_ceil(g.cols);
    let mut tiles = Vec::with_capacity((r_t * r_w) as usize);
    for t in 0..r_t {
        for w in 0..r_w {
            tiles.push(Tile {
                repeat_t: t,
                repeat_w: w,
                batch: t * g.rows..((t + 1) * g.rows).min(shape.batch),
                out: w * g.cols..((w + 1) * g.cols).min(shape.out_dim),
            });
        }
    }
    let illumination_cycles = shape.in_dim * c.sub_cycles as u64;
    Ok(TileSchedule {
        shape,
        c_t: g.rows,
        c_w: g.cols,
        r_t,
        r_w,
        tiles,
        illumination_cycles,
        illumination_s: illumination_cycles as f64 / c.f_clk_hz,
        adc_readout_s: g.pixels_per_adc() as f64 / c.adc_sample_rate_hz,
        reset_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    HbmRead { repeat: u64, bytes: u64 },
    Illuminate { repeat: u64, seconds: f64 },
    AdcReadout { repeat: u64, seconds: f64 },
    HbmWrite { repeat: u64, bytes: u64 },
    Reset { repeat: u64, seconds: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TimingTrace {
    pub events: Vec<TraceEvent>,
}

impl TimingTrace {
    /// Events for every repeat of `schedule`, in pipeline order.
    pub fn from_schedule(schedule: &TileSchedule, bytes_per_value: u64) -> Self {
        let n = schedule.shape.in_dim;
        let mut events = Vec::with_capacity(schedule.tiles.len() * 5);
        for (i, tile) in schedule.tiles.iter().enumerate() {
            let repeat = i as u64;
            let rows = tile.batch.end - tile.batch.start;
            let cols = tile.out.end - tile.out.start;
            // One input row per token and one weight vector per column DAC.
            events.push(TraceEvent::HbmRead {
                repeat,
                bytes: (rows + cols) * n * bytes_per_value,
            });
            events.push(TraceEvent::Illuminate {
                repeat,
                seconds: schedule.illumination_s,
            });
            events.push(TraceEvent::AdcReadout {
                repeat,
                seconds: schedule.adc_readout_s,
            });
            events.push(TraceEvent::HbmWrite {
                repeat,
                bytes: rows * cols * bytes_per_value,
            });
            events.push(TraceEvent::Reset {
                repeat,
                seconds: schedule.reset_s,
            });
        }
        Self { events }
    }

    pub fn extend(&mut self, other: &TimingTrace) {
        self.events.extend_from_slice(&other.events);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TraceTotals {
    pub compute_time_s: f64,
    pub readout_time_s: f64,
    pub reset_time_s: f64,
    pub total_time_s: f64,
    pub hbm_bytes_read: u64,
    pub hbm_bytes_written: u64,
}

impl TraceTotals {
    pub fn add(&mut self, o: &TraceTotals) {
        self.compute_time_s += o.compute_time_s;
        self.readout_time_s += o.readout_time_s;
        self.reset_time_s += o.reset_time_s;
        self.total_time_s += o.total_time_s;
        self.hbm_bytes_read += o.hbm_bytes_read;
        self.hbm_bytes_written += o.hbm_bytes_written;
    }

    pub fn scaled(&self, k: u64) -> Self {
        Self {
            compute_time_s: self.compute_time_s * k as f64,
            readout_time_s: self.readout_time_s * k as f64,
            reset_time_s: self.reset_time_s * k as f64,
            total_time_s: self.total_time_s * k as f64,
            hbm_bytes_read: self.hbm_bytes_read * k,
            hbm_bytes_written: self.hbm_bytes_written * k,
        }
    }
}

pub fn trace_totals(trace: &TimingTrace) -> TraceTotals {
    let mut t = TraceTotals::default();
    for e in &trace.events {
        match *e {
            TraceEvent::HbmRead { bytes, .. } => t.hbm_bytes_read += bytes,
            TraceEvent::Illuminate { seconds, .. } => t.compute_time_s += seconds,
            TraceEvent::AdcReadout { seconds, .. } => t.readout_time_s += seconds,
            TraceEvent::HbmWrite { bytes, .. } => t.hbm_bytes_written += bytes,
            TraceEvent::Reset { seconds, .. } => t.reset_time_s += seconds,
        }
    }
    t.total_time_s = t.compute_time_s + t.readout_time_s + t.reset_time_s;
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    /// Plain floating-point product; no pixel physics.
    #[default]
    Exact,
    /// DAC and ADC quantization only.
    Quantized,
    /// Charge-level simulation of every pixel.
    FullNoise,
}

impl std::str::FromStr for Fidelity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "quantized" => Ok(Self::Quantized),
            "full_noise" | "full-noise" => Ok(Self::FullNoise),
            _ => Err(Error::Config(format!("unknown fidelity '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecuteOptions {
    /// Poisson shot noise in the full-noise path; off gives mean charges.
    pub noise_on: bool,
    /// ADC full scale in units of Σx·w; defaults to the vector length.
    pub adc_full_scale: Option<f64>,
    /// Emitter energy per element at full response; defaults to twice the
    /// minimum average pulse energy for the vector length.
    pub peak_drive_energy_j: Option<f64>,
    pub bytes_per_value: u64,
    pub reset_s: f64,
    /// Trial index folded into the per-pixel random streams.
    pub trial: u64,
}

impl Default for ExecuteOptions {
    fn default() -> Self {
        Self {
            noise_on: true,
            adc_full_scale: None,
            peak_drive_energy_j: None,
            bytes_per_value: 1,
            reset_s: 0.0,
            trial: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Execution {
    #[serde(skip)]
    pub y: Array2<f64>,
    pub trace: TimingTrace,
    pub overflow_count: usize,
    pub saturated_count: usize,
    /// ADC step in units of Σx·w, for the quantizing fidelities.
    pub lsb: Option<f64>,
    /// Largest shot-noise standard deviation over all outputs, in units of
    /// Σx·w (full-noise path with noise on).
    pub sigma_shot_max: Option<f64>,
}

const MAX_REPORTED: usize = 16;

fn check_range(name: &str, m: ArrayView2<f64>) -> Result<()> {
    let mut count = 0;
    let mut indices = Vec::new();
    for ((i, j), v) in m.indexed_iter() {
        if !(v.abs() <= 1.0) {
            count += 1;
            if indices.len() < MAX_REPORTED {
                indices.push((i, j));
            }
        }
    }
    if count > 0 {
        return Err(Error::OutOfRange {
            matrix: name.into(),
            count,
            indices,
        });
    }
    Ok(())
}

/// Rounds to the symmetric grid of a b-bit DAC: 2^b − 1 levels over [−1, 1].
pub fn dac_quantize(v: f64, bits: u32) -> f64 {
    if bits >= 53 {
        return v;
    }
    let k = ((1u64 << (bits - 1)) - 1).max(1) as f64;
    (v * k).round() / k
}

fn dot(x: ArrayView2<f64>, w: ArrayView2<f64>, i: usize, j: usize) -> f64 {
    w.row(i).iter().zip(x.column(j)).map(|(a, b)| a * b).sum()
}

pub fn execute(
    x: ArrayView2<f64>,
    w: ArrayView2<f64>,
    config: &HardwareConfig,
    fidelity: Fidelity,
    seed: u64,
    opts: &ExecuteOptions,
) -> Result<Execution> {
    let (in_dim, batch) = x.dim();
    let (out_dim, w_in) = w.dim();
    if w_in != in_dim {
        return Err(Error::Shape(format!(
            "W is {out_dim}×{w_in} but X has {in_dim} rows"
        )));
    }
    let shape = VmmShape::new(out_dim as u64, in_dim as u64, batch as u64)?;
    check_range("X", x)?;
    check_range("W", w)?;
    let schedule = plan(shape, config, opts.reset_s)?;
    let trace = TimingTrace::from_schedule(&schedule, opts.bytes_per_value);

    let c = &config.clocking;
    let mut y = Array2::<f64>::zeros((out_dim, batch));
    if fidelity == Fidelity::Exact {
        for tile in &schedule.tiles {
            fill_tile(&mut y, tile, |i, j| dot(x, w, i, j));
        }
        return Ok(Execution {
            y,
            trace,
            overflow_count: 0,
            saturated_count: 0,
            lsb: None,
            sigma_shot_max: None,
        });
    }

    let xq = x.mapv(|v| dac_quantize(v, c.dac_bits));
    let wq = w.mapv(|v| dac_quantize(v, c.dac_bits));
    let full_scale = opts.adc_full_scale.unwrap_or(in_dim as f64);
    let quant = Quantizer::new(c.adc_bits, full_scale)?;
    let mode = SequenceMode::from_sub_cycles(c.sub_cycles)?;

    let mut overflow_count = 0;
    let mut saturated_count = 0;
    let mut sigma_shot_max = None;
    match fidelity {
        Fidelity::Quantized => {
            for tile in &schedule.tiles {
                fill_tile(&mut y, tile, |i, j| {
                    let (code, of) = quant.quantize(dot(xq.view(), wq.view(), i, j));
                    overflow_count += of as usize;
                    quant.dequantize(code)
                });
            }
        }
        Fidelity::FullNoise => {
            let params = PixelParams::from_optics(&config.optics);
            let drive = match opts.peak_drive_energy_j {
                Some(e) => PixelDrive::from_energy(&config.optics, c, e),
                None => PixelDrive::at_snr_bound(&config.optics, c, in_dim as u64)?,
            };
            let gain = signal_gain(mode, &params, &drive);
            let r: Array2<f64> = xq.mapv(|v| (v + 1.0) / 2.0);
            let cw: Array2<f64> = wq.mapv(|v| (v + 1.0) / 2.0);
            let ctx = PixelContext {
                r: r.view(),
                c: cw.view(),
                params,
                drive,
                mode,
                gain,
                quant,
                noise_on: opts.noise_on,
                seed,
                trial: opts.trial,
                batch,
            };
            let mut sigma: f64 = 0.0;
            for tile in &schedule.tiles {
                let pixels: Vec<(usize, usize)> = tile_pixels(tile).collect();
                let results: Vec<PixelResult> = pixels
                    .par_iter()
                    .map(|&(i, j)| ctx.run(i, j))
                    .collect::<Result<_>>()?;
                for (&(i, j), res) in pixels.iter().zip(&results) {
                    y[[i, j]] = res.value;
                    overflow_count += res.overflow as usize;
                    saturated_count += res.saturated as usize;
                    sigma = sigma.max(res.sigma);
                }
            }
            if opts.noise_on {
                sigma_shot_max = Some(sigma);
            }
        }
        Fidelity::Exact => unreachable!(),
    }

    Ok(Execution {
        y,
        trace,
        overflow_count,
        saturated_count,
        lsb: Some(quant.lsb()),
        sigma_shot_max,
    })
}

fn tile_pixels(tile: &Tile) -> impl Iterator<Item = (usize, usize)> + '_ {
    tile.out
        .clone()
        .flat_map(move |i| tile.batch.clone().map(move |j| (i as usize, j as usize)))
}

fn fill_tile(y: &mut Array2<f64>, tile: &Tile, mut f: impl FnMut(usize, usize) -> f64) {
    for (i, j) in tile_pixels(tile) {
        y[[i, j]] = f(i, j);
    }
}

struct PixelContext<'a> {
    r: ArrayView2<'a, f64>,
    c: ArrayView2<'a, f64>,
    params: PixelParams,
    drive: PixelDrive,
    mode: SequenceMode,
    gain: f64,
    quant: Quantizer,
    noise_on: bool,
    seed: u64,
    trial: u64,
    batch: usize,
}

struct PixelResult {
    value: f64,
    overflow: bool,
    saturated: bool,
    sigma: f64,
}

impl PixelContext<'_> {
    fn run(&self, i: usize, j: usize) -> Result<PixelResult> {
        let samples: Vec<DriveSample> = self
            .c
            .row(i)
            .iter()
            .zip(self.r.column(j))
            .map(|(&c, &r)| DriveSample { r, c })
            .collect();
        let mut state = PixelState::new(self.params);
        let mut rng = self
            .noise_on
            .then(|| stream_rng(self.seed, (i * self.batch + j) as u64, self.trial));
        accumulate(&mut state, &samples, self.mode, &self.drive, rng.as_mut())?;

        let mut signal = state.signal_electrons(self.mode) / self.gain;
        if self.mode == SequenceMode::UnipolarSingle {
            // Σ R·C read from the pixel; Σ R and Σ C are known digitally.
            let (sr, sc): (f64, f64) = samples
                .iter()
                .fold((0.0, 0.0), |a, s| (a.0 + s.r, a.1 + s.c));
            signal = 4.0 * signal - 2.0 * sr - 2.0 * sc + samples.len() as f64;
        }
        // The charge-to-voltage step over C_pix scales signal and full scale
        // alike, so digitizing in units of Σx·w gives the same codes.
        let (code, overflow) = self.quant.quantize(signal);
        let total = match self.mode {
            SequenceMode::SymmetrizedBipolar => 0.25 * state.total_electrons(),
            _ => state.total_electrons(),
        };
        Ok(PixelResult {
            value: self.quant.dequantize(code),
            overflow,
            saturated: state.saturated,
            sigma: total.sqrt() / self.gain,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Plan and time the workload without materializing matrices.
    pub timing_only: bool,
    /// Cap on element-sub-cycles (MACs × r for full noise, MACs otherwise).
    pub budget: u128,
    pub execute: ExecuteOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            timing_only: false,
            budget: 500_000_000,
            execute: ExecuteOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VmmRun {
    pub kind: VmmKind,
    pub shape: VmmShape,
    pub repeats: u64,
    pub totals: TraceTotals,
    /// Largest |Y − W·X| against the floating-point oracle on the same input.
    pub max_abs_error: Option<f64>,
    pub lsb: Option<f64>,
    pub sigma_shot_max: Option<f64>,
    pub overflow_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerRun {
    pub layer: u64,
    pub vmms: Vec<VmmRun>,
    pub totals: TraceTotals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerfCheck {
    pub schedule_compute_s: f64,
    pub schedule_readout_s: f64,
    pub analytic_delay_s: f64,
    pub relative_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRun {
    pub layers: Vec<LayerRun>,
    pub totals: TraceTotals,
    pub check: Option<PerfCheck>,
    #[serde(skip)]
    pub output: Option<Array2<f64>>,
}

/// Work a run would need, in element-sub-cycles.
pub fn run_cost(
    dims: &TransformerDims,
    config: &HardwareConfig,
    fidelity: Fidelity,
) -> Result<u128> {
    let plan = workload_plan(dims)?;
    let per_mac = match fidelity {
        Fidelity::FullNoise => config.clocking.sub_cycles as u128,
        _ => 1,
    };
    Ok(plan.vmms.iter().map(|(_, s)| s.macs()).sum::<u128>() * plan.layers as u128 * per_mac)
}

const DATA_STREAM: u64 = u64::MAX;

fn random_matrix(rows: usize, cols: usize, seed: u64, tag: u64) -> Array2<f64> {
    let mut rng = stream_rng(seed, DATA_STREAM, tag);
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..=1.0))
}

fn absmax_rescale(m: &mut Array2<f64>) {
    let a = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if a > 0.0 {
        m.mapv_inplace(|v| (v / a).clamp(-1.0, 1.0));
    }
}

fn gelu(v: f64) -> f64 {
    0.5 * v * (1.0 + (0.797_884_560_802_865_4 * (v + 0.044715 * v * v * v)).tanh())
}

/// Softmax attention over the projected Q, K, V, computed in floating point.
/// Pattern products KᵀQ and V·A never occupy the array.
fn attention_oracle(qkv: &Array2<f64>, dims: &TransformerDims) -> Array2<f64> {
    let (s, h) = (dims.head_dim as usize, dims.heads as usize);
    let sh = s * h;
    let t = qkv.ncols();
    let mut z = Array2::zeros((sh, t));
    let scale = 1.0 / (s as f64).sqrt();
    for head in 0..h {
        let rows = head * s..(head + 1) * s;
        let q = qkv.slice(s![rows.clone(), ..]);
        let k = qkv.slice(s![sh + rows.start..sh + rows.end, ..]);
        let v = qkv.slice(s![2 * sh + rows.start..2 * sh + rows.end, ..]);
        let mut a = k.t().dot(&q) * scale;
        for mut col in a.axis_iter_mut(Axis(1)) {
            let m = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            col.mapv_inplace(|e| (e - m).exp());
            let sum: f64 = col.sum();
            col.mapv_inplace(|e| e / sum);
        }
        z.slice_mut(s![rows, ..]).assign(&v.dot(&a));
    }
    z
}

/// Runs every layer of the workload plan. Weights and the first input are
/// drawn from `seed`; each product's output is rescaled to [−1, 1] before it
/// feeds the next product.
pub fn run_model(
    dims: &TransformerDims,
    config: &HardwareConfig,
    fidelity: Fidelity,
    seed: u64,
    opts: &RunOptions,
) -> Result<ModelRun> {
    if dims.layers == 0 {
        TransformerDims { layers: 1, ..*dims }.validate()?;
        return Ok(ModelRun {
            layers: Vec::new(),
            totals: TraceTotals::default(),
            check: None,
            output: None,
        });
    }
    let plan_ = workload_plan(dims)?;
    let schedules: Vec<(VmmKind, TileSchedule)> = plan_
        .vmms
        .iter()
        .map(|&(k, s)| plan(s, config, opts.execute.reset_s).map(|p| (k, p)))
        .collect::<Result<_>>()?;

    let analytic = system_delay(dims, config)?.seconds;

    if opts.timing_only {
        let mut layer_totals = TraceTotals::default();
        let vmms: Vec<VmmRun> = schedules
            .iter()
            .map(|(k, sch)| {
                let totals = trace_totals(&TimingTrace::from_schedule(
                    sch,
                    opts.execute.bytes_per_value,
                ));
                layer_totals.add(&totals);
                VmmRun {
                    kind: *k,
                    shape: sch.shape,
                    repeats: sch.repeats(),
                    totals,
                    max_abs_error: None,
                    lsb: None,
                    sigma_shot_max: None,
                    overflow_count: 0,
                }
            })
            .collect();
        let layers: Vec<LayerRun> = (0..dims.layers)
            .map(|layer| LayerRun {
                layer,
                vmms: vmms.clone(),
                totals: layer_totals,
            })
            .collect();
        let totals = layer_totals.scaled(dims.layers);
        return Ok(ModelRun {
            layers,
            totals,
            check: Some(perf_check(&totals, analytic)),
            output: None,
        });
    }

    let required = run_cost(dims, config, fidelity)?;
    if required > opts.budget {
        return Err(Error::BudgetExceeded {
            required,
            budget: opts.budget,
        });
    }

    let (n, t) = (dims.embed_dim as usize, dims.tokens as usize);
    let mut h = random_matrix(n, t, seed, 0);
    let mut layers = Vec::with_capacity(dims.layers as usize);
    let mut totals = TraceTotals::default();
    for layer in 0..dims.layers {
        let mut vmms = Vec::with_capacity(4);
        let mut layer_totals = TraceTotals::default();
        for (idx, (kind, sch)) in schedules.iter().enumerate() {
            let tag = 1 + layer * 4 + idx as u64;
            let w = random_matrix(
                sch.shape.out_dim as usize,
                sch.shape.in_dim as usize,
                seed,
                tag,
            );
            let exec_opts = ExecuteOptions {
                trial: tag,
                ..opts.execute
            };
            let ex = execute(h.view(), w.view(), config, fidelity, seed, &exec_opts)?;
            let oracle = w.dot(&h);
            let err = (&ex.y - &oracle).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let vt = trace_totals(&ex.trace);
            layer_totals.add(&vt);
            vmms.push(VmmRun {
                kind: *kind,
                shape: sch.shape,
                repeats: sch.repeats(),
                totals: vt,
                max_abs_error: Some(err),
                lsb: ex.lsb,
                sigma_shot_max: ex.sigma_shot_max,
                overflow_count: ex.overflow_count,
            });

            let mut next = match kind {
                VmmKind::QueryKeyValue => attention_oracle(&ex.y, dims),
                VmmKind::Up => ex.y.mapv(gelu),
                _ => ex.y,
            };
            absmax_rescale(&mut next);
            h = next;
        }
        totals.add(&layer_totals);
        layers.push(LayerRun {
            layer,
            vmms,
            totals: layer_totals,
        });
    }

    Ok(ModelRun {
        layers,
        totals,
        check: Some(perf_check(&totals, analytic)),
        output: Some(h),
    })
}

fn perf_check(totals: &TraceTotals, analytic: f64) -> PerfCheck {
    PerfCheck {
        schedule_compute_s: totals.compute_time_s,
        schedule_readout_s: totals.readout_time_s,
        analytic_delay_s: analytic,
        relative_difference: (totals.compute_time_s / analytic - 1.0).abs(),
    }
}
