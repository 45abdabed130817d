// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use ndarray::Array2;
use serde::Serialize;

use crate::args::*;
use crate::config::ConfigFile;
use crate::error::{CliError, Result};
use crate::matrix;
use crate::output::{to_csv, to_json, Emitter};
use oen_core::constants::ELECTRON_CHARGE;
use oen_core::dac_scaling::{
    doubling_counts, idac_rdac_crossover, preset_models, scaling_table, DacKind,
};
use oen_core::energy_snr::{
    exposure_time, min_pulse_energy, snr_condition_holds, threshold_dark_current, SnrOperatingPoint,
};
use oen_core::mmm_engine::{
    execute, run_model, trace_totals, ExecuteOptions, Execution, Fidelity, RunOptions, TraceTotals,
};
use oen_core::perf_analytics::{
    calibrate_table1, compare_table1, evaluate, sweep, ComparisonRow, PerfOptions, PerfReport,
    PowerForm, Table1Targets, SWEEP_CSV_HEADER,
};
use oen_core::pixel_sim::{
    accumulate, accumulate_seeded, mac_exact, readout, signal_gain, uniform_signed, Encoder,
    PixelDrive, PixelParams, PixelState, Readout, SequenceMode,
};
use oen_core::rng::stream_rng;
use oen_quant::data::Dataset;
use oen_quant::eval::{eval_under_noise, SigmaSummary, CURVE_CSV_HEADER};
use oen_quant::model::MatmulPolicy;
use oen_quant::noise::NoiseConfig;
use oen_quant::train::{accuracy, qat_finetune, train_toy};

/// Everything a subcommand needs besides its own arguments.
pub struct Ctx<'a> {
    pub config: &'a ConfigFile,
    pub out: Option<&'a Path>,
    pub emitter: Emitter<'a>,
}

fn perf_options(p: &PowerArgs) -> PerfOptions {
    PerfOptions {
        exclude_hbm: !p.include_hbm,
        power_form: match p.power_form {
            PowerFormArg::Full => PowerForm::Full,
            PowerFormArg::LargeN => PowerForm::LargeN,
        },
    }
}

#[derive(Serialize)]
struct PerfOutput<'a> {
    report: &'a PerfReport,
    table1_comparison: Vec<ComparisonRow>,
}

pub fn perf(ctx: &Ctx, a: &PerfArgs) -> Result<()> {
    let r = evaluate(
        &ctx.config.dims,
        &ctx.config.hardware,
        &perf_options(&a.power),
    )?;
    let body = to_json(&PerfOutput {
        report: &r,
        table1_comparison: compare_table1(&r),
    });
    ctx.emitter.emit(ctx.out, &body)?;
    eprintln!(
        "{}x{}: {:.0} TOPS, {:.2} ms, {:.1} W, {:.1} TOPS/W, {:.1} mm2, {:.2} TOPS/mm2",
        r.c_t,
        r.c_w,
        r.speed_tops,
        r.delay_s * 1e3,
        r.power_w,
        r.power_efficiency_ops_s_w / 1e12,
        r.area_mm2,
        r.area_efficiency_ops_s_mm2 / 1e12
    );
    Ok(())
}

pub fn sweep_cmd(ctx: &Ctx, a: &SweepArgs) -> Result<()> {
    let grid = sweep(
        &ctx.config.dims,
        &ctx.config.hardware,
        &a.rows,
        &a.cols,
        &perf_options(&a.power),
    )?;
    let body = to_csv(&SWEEP_CSV_HEADER, grid.iter().map(|r| r.sweep_csv_record()))?;
    ctx.emitter.emit(ctx.out, &body)?;
    eprintln!("{} grid points", grid.len());
    Ok(())
}

pub fn dac(ctx: &Ctx, a: &DacArgs) -> Result<()> {
    if a.max_pixels == 0 {
        return Err(CliError::Usage("--max-pixels must be >= 1".into()));
    }
    let models = preset_models();
    let rows = scaling_table(&models, &doubling_counts(a.max_pixels))?;
    let header = [
        "kind",
        "load_impedance_ohm",
        "n_pixels",
        "energy_total_j",
        "energy_per_pixel_j",
        "area_um2",
    ];
    let body = to_csv(
        &header,
        rows.iter().map(|r| {
            [
                kind_name(r.kind).to_string(),
                num(r.load_impedance_ohm),
                r.n_pixels.to_string(),
                num(r.energy_total_j),
                num(r.energy_per_pixel_j),
                num(r.area_um2),
            ]
        }),
    )?;
    ctx.emitter.emit(ctx.out, &body)?;
    for pair in models.chunks(2) {
        match idac_rdac_crossover(&pair[0], &pair[1]) {
            Some(n) => eprintln!(
                "{:.0e} ohm load: IDAC overtakes RDAC at {n:.0} pixels",
                pair[0].load_impedance_ohm
            ),
            None => eprintln!("{:.0e} ohm load: no crossover", pair[0].load_impedance_ohm),
        }
    }
    Ok(())
}

/// Shortest round-trip form; switches to exponent notation for very large
/// or small magnitudes.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn kind_name(k: DacKind) -> &'static str {
    match k {
        DacKind::Rdac => "rdac",
        DacKind::Idac => "idac",
    }
}

pub fn snr(ctx: &Ctx, a: &SnrArgs) -> Result<()> {
    let hw = &ctx.config.hardware;
    let header = [
        "n_vec",
        "t_expo_s",
        "i_th_a",
        "i_dark_a",
        "regime",
        "e_u_j",
        "e_u_limit_j",
        "snr_lhs",
        "snr_rhs",
        "snr_ratio",
    ];
    let mut records = Vec::with_capacity(a.lengths.len());
    for &n in &a.lengths {
        if n == 0 {
            return Err(CliError::Usage("--lengths entries must be >= 1".into()));
        }
        let m = min_pulse_energy(&hw.optics, &hw.clocking, n)?;
        let op = SnrOperatingPoint::from_pulse_energy(&hw.optics, &hw.clocking, n, m.e_u_j);
        let check = snr_condition_holds(&op)?;
        let regime = serde_json::to_value(m.regime).expect("enum serializes");
        records.push([
            n.to_string(),
            num(exposure_time(&hw.clocking, n)),
            num(threshold_dark_current(&hw.clocking, n)),
            num(hw.optics.dark_current_a),
            regime.as_str().unwrap_or_default().to_string(),
            num(m.e_u_j),
            num(m.e_u_limit_j),
            num(check.lhs),
            num(check.rhs),
            num(check.ratio),
        ]);
    }
    let body = to_csv(&header, records)?;
    ctx.emitter.emit(ctx.out, &body)?;
    Ok(())
}

#[derive(Serialize)]
struct PixelReport {
    length: usize,
    mode: SequenceMode,
    seed: u64,
    trial: u64,
    noise: bool,
    electrons_per_unit: f64,
    dark_electrons_per_sub_cycle: f64,
    exact_dot: f64,
    estimated_dot: f64,
    readout_dot: f64,
    shot_noise_sigma_dot: f64,
    signal_electrons: f64,
    total_electrons: f64,
    saturated: bool,
    readout: Readout,
}

pub fn pixel(ctx: &Ctx, a: &PixelArgs) -> Result<()> {
    if a.length == 0 {
        return Err(CliError::Usage("--length must be >= 1".into()));
    }
    let hw = &ctx.config.hardware;
    let mode = SequenceMode::from_sub_cycles(hw.clocking.sub_cycles)?;
    let mut rng = stream_rng(a.seed, u64::MAX, a.trial);
    let xs: Vec<f64> = (0..a.length).map(|_| uniform_signed(&mut rng)).collect();
    let ws: Vec<f64> = (0..a.length).map(|_| uniform_signed(&mut rng)).collect();
    let mut enc = Encoder::default();
    let samples = xs
        .iter()
        .zip(&ws)
        .map(|(&x, &w)| enc.sample(x, w))
        .collect::<oen_core::Result<Vec<_>>>()?;
    let params = PixelParams::from_optics(&hw.optics);
    let drive = PixelDrive::at_snr_bound(&hw.optics, &hw.clocking, a.length as u64)?;
    let mut state = PixelState::new(params);
    if a.no_noise {
        accumulate(&mut state, &samples, mode, &drive, None)?;
    } else {
        accumulate_seeded(&mut state, &samples, mode, &drive, a.seed, 0, a.trial)?;
    }
    let gain = signal_gain(mode, &params, &drive);
    let volts_per_unit = gain * ELECTRON_CHARGE / params.pixel_capacitance_f;
    let r = readout(
        &state,
        mode,
        hw.clocking.adc_bits,
        volts_per_unit * a.length as f64,
    )?;
    let report = PixelReport {
        length: a.length,
        mode,
        seed: a.seed,
        trial: a.trial,
        noise: !a.no_noise,
        electrons_per_unit: drive.electrons_per_unit,
        dark_electrons_per_sub_cycle: drive.dark_electrons_per_sub_cycle,
        exact_dot: mac_exact(&xs, &ws)?,
        estimated_dot: state.signal_electrons(mode) / gain,
        readout_dot: r.value_v / volts_per_unit,
        shot_noise_sigma_dot: state.total_electrons().sqrt() / gain,
        signal_electrons: state.signal_electrons(mode),
        total_electrons: state.total_electrons(),
        saturated: state.saturated,
        readout: r,
    };
    ctx.emitter.emit(ctx.out, &to_json(&report))?;
    eprintln!(
        "exact {:.6}, pixel {:.6}, adc {:.6} (code {}), shot sigma {:.3e}",
        report.exact_dot,
        report.estimated_dot,
        report.readout_dot,
        r.code,
        report.shot_noise_sigma_dot
    );
    Ok(())
}

fn fidelity(f: FidelityArg) -> Fidelity {
    match f {
        FidelityArg::Exact => Fidelity::Exact,
        FidelityArg::Quantized => Fidelity::Quantized,
        FidelityArg::FullNoise => Fidelity::FullNoise,
    }
}

#[derive(Serialize)]
struct MmmReport<'a> {
    out_dim: usize,
    in_dim: usize,
    batch: usize,
    fidelity: Fidelity,
    max_abs_error: f64,
    totals: TraceTotals,
    execution: &'a Execution,
}

fn random_matrix(rows: u64, cols: u64, seed: u64, tag: u64) -> Result<Array2<f64>> {
    if rows == 0 || cols == 0 {
        return Err(CliError::Usage("--random dimensions must be >= 1".into()));
    }
    let mut rng = stream_rng(seed, u64::MAX, tag);
    Ok(Array2::from_shape_simple_fn(
        (rows as usize, cols as usize),
        || uniform_signed(&mut rng),
    ))
}

pub fn mmm(ctx: &Ctx, a: &MmmArgs) -> Result<()> {
    let hw = &ctx.config.hardware;
    let exec = ExecuteOptions {
        noise_on: !a.no_noise,
        trial: a.trial,
        ..ExecuteOptions::default()
    };
    if a.model {
        let opts = RunOptions {
            timing_only: a.timing_only,
            budget: a.budget,
            execute: exec,
        };
        let run = run_model(&ctx.config.dims, hw, fidelity(a.fidelity), a.seed, &opts)?;
        ctx.emitter.emit(ctx.out, &to_json(&run))?;
        if let Some(t) = a.trace.as_deref() {
            ctx.emitter.write_file(t, &to_json(&run))?;
        }
        eprintln!(
            "{} layers, {:.6e} s total",
            run.layers.len(),
            run.totals.total_time_s
        );
        return Ok(());
    }
    let (x, w) = match (&a.x, &a.w, &a.random) {
        (Some(x), Some(w), _) => (matrix::read(x)?, matrix::read(w)?),
        (_, _, Some(d)) if d.len() == 3 => (
            random_matrix(d[1], d[2], a.seed, 2)?,
            random_matrix(d[0], d[1], a.seed, 1)?,
        ),
        (_, _, Some(_)) => return Err(CliError::Usage("--random takes OUT,IN,BATCH".into())),
        _ => unreachable!("clap enforces one source"),
    };
    let ex = execute(x.view(), w.view(), hw, fidelity(a.fidelity), a.seed, &exec)?;
    let exact = w.dot(&x);
    let max_abs_error = (&ex.y - &exact).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let report = MmmReport {
        out_dim: w.nrows(),
        in_dim: w.ncols(),
        batch: x.ncols(),
        fidelity: fidelity(a.fidelity),
        max_abs_error,
        totals: trace_totals(&ex.trace),
        execution: &ex,
    };
    let json = to_json(&report);
    match ctx.out {
        Some(p) => ctx.emitter.write_file(p, &matrix::encode(&ex.y))?,
        None if a.trace.is_none() => {
            ctx.emitter.emit(None, &json)?;
        }
        None => {}
    }
    if let Some(t) = a.trace.as_deref() {
        ctx.emitter.write_file(t, &json)?;
    }
    eprintln!(
        "Y {}x{}, max |error| {:.3e}, {:.6e} s",
        report.out_dim, report.batch, max_abs_error, report.totals.total_time_s
    );
    Ok(())
}

#[derive(Serialize)]
struct NoiseSummary<'a> {
    variant: &'static str,
    seed: u64,
    baseline_test_accuracy: f64,
    clean_test_accuracy: f64,
    summary: &'a [SigmaSummary],
}

pub fn noise_eval(ctx: &Ctx, a: &NoiseEvalArgs) -> Result<()> {
    let study = &ctx.config.noise_study;
    let sigmas = a.sigmas.clone().unwrap_or_else(|| study.sigmas.clone());
    let trials = a.trials.unwrap_or(study.trials);
    let data = Dataset::generate(&study.dataset, a.seed)?;
    let base = train_toy(&data, study.model, &study.train, a.seed)?;
    let (model, variant) = match a.variant {
        Variant::Ptq => (base.model.clone(), "ptq"),
        Variant::Qat => {
            let clean = NoiseConfig {
                sigma: 0.0,
                ..study.noise
            };
            let m = qat_finetune(
                &base.model,
                &data.train,
                &study.quant,
                &clean,
                &study.finetune,
                a.seed,
            )?;
            (m, "qat")
        }
    };
    let curve = eval_under_noise(
        &model,
        &data.test,
        &study.quant,
        &study.noise,
        &sigmas,
        trials,
        a.seed,
    )?;
    let body = to_csv(
        &CURVE_CSV_HEADER,
        curve
            .records
            .iter()
            .map(|r| [num(r.sigma), r.trial.to_string(), num(r.accuracy)]),
    )?;
    ctx.emitter.emit(ctx.out, &body)?;
    let summary = NoiseSummary {
        variant,
        seed: a.seed,
        baseline_test_accuracy: base.test_accuracy,
        clean_test_accuracy: accuracy(&model, &data.test, &MatmulPolicy::exact())?,
        summary: &curve.summary,
    };
    if let Some(p) = a.summary.as_deref() {
        ctx.emitter.write_file(p, &to_json(&summary))?;
    }
    eprintln!(
        "{variant}: full-precision baseline {:.4}",
        base.test_accuracy
    );
    for s in &curve.summary {
        eprintln!(
            "  sigma {:.3}: {:.4} +/- {:.4}",
            s.sigma, s.mean_accuracy, s.std_accuracy
        );
    }
    Ok(())
}

pub fn calibrate(ctx: &Ctx, a: &CalibrateArgs) -> Result<()> {
    let targets = Table1Targets {
        power_efficiency_ops_s_w: a.target_efficiency,
        area_mm2: a.target_area_mm2,
    };
    let cal = calibrate_table1(&ctx.config.hardware, &ctx.config.dims, &targets)?;
    ctx.emitter.emit(ctx.out, &to_json(&cal))?;
    eprintln!(
        "e_dm_j = {:.6e}, a_dac_um2 = {:.3}",
        cal.e_dm_j, cal.a_dac_um2
    );
    Ok(())
}
