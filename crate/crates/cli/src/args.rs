// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "oen-npu",
    version,
    about = "Performance model and simulator for an optoelectronic NPU built from demodulator-pixel image sensors"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Strict JSON configuration file
    #[arg(
        long,
        global = true,
        help_heading = "Global options",
        env = "OEN_NPU_CONFIG",
        hide_env_values = true,
        value_name = "PATH"
    )]
    pub config: Option<PathBuf>,

    /// Built-in configuration; takes precedence over --config
    #[arg(long, global = true, help_heading = "Global options", value_parser = ["table1", "budget"])]
    pub preset: Option<String>,

    /// Override one config field, e.g. clocking.f_clk_hz=1e9; paths not
    /// found at the root resolve under `hardware`. Repeatable
    #[arg(
        long = "set",
        global = true,
        help_heading = "Global options",
        value_name = "PATH=VALUE"
    )]
    pub set: Vec<String>,

    /// Output file, written with a .manifest.json beside it; stdout when absent
    #[arg(
        long,
        global = true,
        help_heading = "Global options",
        value_name = "PATH"
    )]
    pub out: Option<PathBuf>,

    /// Cap on worker threads
    #[arg(long, global = true, help_heading = "Global options", value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Performance report for one array configuration (JSON)
    Perf(PerfArgs),
    /// Performance over a grid of array sizes (CSV)
    Sweep(SweepArgs),
    /// DAC energy and area against driven pixel count (CSV)
    Dac(DacArgs),
    /// Minimum pulse energy and threshold dark current per vector length (CSV)
    Snr(SnrArgs),
    /// Simulate one dot product on a single pixel (JSON)
    Pixel(PixelArgs),
    /// Run a matrix product or a whole transformer on the array
    Mmm(MmmArgs),
    /// Toy-classifier accuracy under quantization and device noise (CSV)
    NoiseEval(NoiseEvalArgs),
    /// Back-solve the lumped pixel energy and DAC area from published targets (JSON)
    Calibrate(CalibrateArgs),
    /// Check the configuration and report every broken rule
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PowerFormArg {
    /// Every term, including the finite-array DAC and I/O shares
    Full,
    /// Large-array limit
    LargeN,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// Power model form
    #[arg(long, value_enum, default_value_t = PowerFormArg::Full)]
    pub power_form: PowerFormArg,

    /// Count external memory reads in the power budget
    #[arg(long)]
    pub include_hbm: bool,
}

#[derive(Debug, Args)]
pub struct PerfArgs {
    #[command(flatten)]
    pub power: PowerArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Array row counts (C_T), comma-separated
    #[arg(long, value_delimiter = ',', required = true, value_name = "N,...")]
    pub rows: Vec<u64>,

    /// Array column counts (C_W), comma-separated
    #[arg(long, value_delimiter = ',', required = true, value_name = "N,...")]
    pub cols: Vec<u64>,

    #[command(flatten)]
    pub power: PowerArgs,
}

#[derive(Debug, Args)]
pub struct DacArgs {
    /// Largest driven pixel count; counts double from 1
    #[arg(long, default_value_t = 4096, value_name = "N")]
    pub max_pixels: u64,
}

#[derive(Debug, Args)]
pub struct SnrArgs {
    /// Vector lengths, comma-separated
    #[arg(long = "lengths", value_delimiter = ',', default_values_t = [100u64, 1000, 10000], value_name = "N,...")]
    pub lengths: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct PixelArgs {
    /// Run seed
    #[arg(long)]
    pub seed: u64,

    /// Vector length
    #[arg(long, default_value_t = 1024, value_name = "N")]
    pub length: usize,

    /// Trial index for the shot-noise stream
    #[arg(long, default_value_t = 0)]
    pub trial: u64,

    /// Use mean charges instead of Poisson draws
    #[arg(long)]
    pub no_noise: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FidelityArg {
    /// Floating-point product, timing from the schedule
    Exact,
    /// Input/weight DAC and output ADC quantization
    Quantized,
    /// Charge-level pixel simulation with shot noise
    FullNoise,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["x", "random", "model"])))]
pub struct MmmArgs {
    /// Run seed
    #[arg(long)]
    pub seed: u64,

    /// Input matrix X (in_dim x batch), OENMAT01 file
    #[arg(long, value_name = "PATH", requires = "w")]
    pub x: Option<PathBuf>,

    /// Weight matrix W (out_dim x in_dim), OENMAT01 file
    #[arg(long, value_name = "PATH", requires = "x")]
    pub w: Option<PathBuf>,

    /// Draw W and X uniformly from [-1, 1] with the given shape
    #[arg(long, value_delimiter = ',', value_name = "OUT,IN,BATCH")]
    pub random: Option<Vec<u64>>,

    /// Run every product of the configured transformer
    #[arg(long)]
    pub model: bool,

    /// With --model: plan and time only, without matrices
    #[arg(long, requires = "model")]
    pub timing_only: bool,

    /// Simulation fidelity
    #[arg(long, value_enum, default_value_t = FidelityArg::Exact)]
    pub fidelity: FidelityArg,

    /// Use mean charges in the full-noise path
    #[arg(long)]
    pub no_noise: bool,

    /// Cap on simulated element-sub-cycles for --model
    #[arg(long, default_value_t = 500_000_000, value_name = "N")]
    pub budget: u128,

    /// Trial index for the random streams
    #[arg(long, default_value_t = 0)]
    pub trial: u64,

    /// Write the execution summary and timing trace here (JSON)
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    /// Quantize the trained full-precision model
    Ptq,
    /// Fine-tune with quantization in the loop first
    Qat,
}

#[derive(Debug, Args)]
pub struct NoiseEvalArgs {
    /// Run seed for data, training and noise
    #[arg(long)]
    pub seed: u64,

    /// Model variant to evaluate
    #[arg(long, value_enum, default_value_t = Variant::Ptq)]
    pub variant: Variant,

    /// Noise levels, comma-separated; overrides noise_study.sigmas
    #[arg(long, value_delimiter = ',', value_name = "S,...")]
    pub sigmas: Option<Vec<f64>>,

    /// Trials per noise level; overrides noise_study.trials
    #[arg(long, value_name = "N")]
    pub trials: Option<u64>,

    /// Write the per-sigma mean and std here (JSON)
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Target power efficiency, ops/s/W
    #[arg(long, default_value_t = 74e12, value_name = "OPS_S_W")]
    pub target_efficiency: f64,

    /// Target total area, mm^2
    #[arg(long, default_value_t = 654.0, value_name = "MM2")]
    pub target_area_mm2: f64,
}
