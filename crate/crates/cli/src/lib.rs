// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: configuration handling, subcommand dispatch and
//! deterministic report files.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod matrix;
pub mod output;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
use commands::Ctx;
use error::{CliError, Result};
use output::Emitter;

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let arguments: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match dispatch(&cli, &arguments) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Perf(_) => "perf",
        Command::Sweep(_) => "sweep",
        Command::Dac(_) => "dac",
        Command::Snr(_) => "snr",
        Command::Pixel(_) => "pixel",
        Command::Mmm(_) => "mmm",
        Command::NoiseEval(_) => "noise-eval",
        Command::Calibrate(_) => "calibrate",
        Command::Validate => "validate",
    }
}

fn seed_of(c: &Command) -> Option<u64> {
    match c {
        Command::Pixel(a) => Some(a.seed),
        Command::Mmm(a) => Some(a.seed),
        Command::NoiseEval(a) => Some(a.seed),
        _ => None,
    }
}

fn dispatch(cli: &Cli, arguments: &[String]) -> Result<()> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    let (config, source) = config::load(g.config.as_deref(), g.preset.as_deref(), &g.set)?;
    let violations = config.violations();
    if let Command::Validate = cli.command {
        if violations.is_empty() {
            println!("ok");
            return Ok(());
        }
    }
    if !violations.is_empty() {
        return Err(CliError::Invalid(violations.join("\n")));
    }
    let ctx = Ctx {
        config: &config,
        out: g.out.as_deref(),
        emitter: Emitter {
            subcommand: subcommand_name(&cli.command),
            arguments,
            source: &source,
            config: &config,
            seed: seed_of(&cli.command),
        },
    };
    match &cli.command {
        Command::Perf(a) => commands::perf(&ctx, a),
        Command::Sweep(a) => commands::sweep_cmd(&ctx, a),
        Command::Dac(a) => commands::dac(&ctx, a),
        Command::Snr(a) => commands::snr(&ctx, a),
        Command::Pixel(a) => commands::pixel(&ctx, a),
        Command::Mmm(a) => commands::mmm(&ctx, a),
        Command::NoiseEval(a) => commands::noise_eval(&ctx, a),
        Command::Calibrate(a) => commands::calibrate(&ctx, a),
        Command::Validate => unreachable!("handled above"),
    }
}
