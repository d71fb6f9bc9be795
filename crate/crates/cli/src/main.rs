//! `bbfluct`: command-line front end to the black-body statistics laboratory.
//!
//! Exit codes: 0 when every assertion holds, 1 when one fails, 2 for usage
//! or configuration errors.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use serde_json::Map;
use std::io::Write;
use std::process::ExitCode;

use bbfluct_core::rng::DEFAULT_SEED;
use bbfluct_core::Error;

use commands::*;
use config::{read_config, resolve, split_globals, Format, Global};
use output::Report;

#[derive(Parser)]
#[command(name = "bbfluct", version, about = "Black-body radiation statistics, checked several ways")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Planck density and its limits on a frequency grid.
    Spectrum(SpectrumArgs),
    /// Two-term energy fluctuation of a band, four routes.
    Fluctuation(FluctuationArgs),
    /// Split the Bose law into Poisson multiplets or binary photons.
    Decompose(DecomposeArgs),
    /// Classical string ensemble: energy fluctuation of a segment.
    String(StringArgs),
    /// Pulse-train fluctuation scan and the random-phase baseline.
    PulseTrain(PulseTrainArgs),
    /// Quantized string: segment fluctuation budget on a truncated Fock space.
    Bhj(BhjArgs),
    /// Exact counting identities by enumeration.
    Combinatorics(CombinatoricsArgs),
    /// Gillespie run of a cavity coupled to two-level atoms.
    Kinetics(KineticsArgs),
    /// Every check, with a pass/fail line.
    VerifyAll,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Fluctuation(_) => "fluctuation",
            Command::Decompose(_) => "decompose",
            Command::String(_) => "string",
            Command::PulseTrain(_) => "pulse-train",
            Command::Bhj(_) => "bhj",
            Command::Combinatorics(_) => "combinatorics",
            Command::Kinetics(_) => "kinetics",
            Command::VerifyAll => "verify-all",
        }
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

fn is_config_error(e: &Error) -> bool {
    !matches!(e, Error::Evaluation(_) | Error::Curvature(_) | Error::Frozen | Error::NoConvergence(_))
}

fn execute(cli: &Cli) -> Result<(Report, Global), Failure> {
    let file = match &cli.global.config {
        Some(p) => read_config(p).map_err(Failure::Usage)?,
        None => Map::new(),
    };
    let (file_globals, file_params) = split_globals(file);
    let global: Global = resolve(file_globals, &cli.global).map_err(Failure::Usage)?;
    let run = Run { seed: global.seed.unwrap_or(DEFAULT_SEED), samples: global.samples };
    let params = file_params;
    let report = match &cli.command {
        Command::Spectrum(a) => spectrum(&resolve(params, a).map_err(Failure::Usage)?, &run),
        Command::Fluctuation(a) => fluctuation(&resolve(params, a).map_err(Failure::Usage)?, &run),
        Command::Decompose(a) => decompose_cmd(&resolve(params, a).map_err(Failure::Usage)?, &run),
        Command::String(a) => string(&resolve(params, a).map_err(Failure::Usage)?, &run),
        Command::PulseTrain(a) => pulse_train(&resolve(params, a).map_err(Failure::Usage)?, &run),
        Command::Bhj(a) => bhj(&resolve(params, a).map_err(Failure::Usage)?, &run),
        Command::Combinatorics(a) => combinatorics(&resolve(params, a).map_err(Failure::Usage)?, &run),
        Command::Kinetics(a) => kinetics(&resolve(params, a).map_err(Failure::Usage)?, &run),
        Command::VerifyAll => {
            if let Some(k) = params.keys().next() {
                return Err(Failure::Usage(format!("invalid config: unknown key `{k}` for verify-all")));
            }
            verify(&run)
        }
    }
    .map_err(Failure::Run)?;
    Ok((report, global))
}

fn write_report(report: &Report, global: &Global) -> std::io::Result<()> {
    let format = global.format.unwrap_or(Format::Json);
    match &global.out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            report.write(format, &mut f)?;
            f.flush()
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report.write(format, &mut lock)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let (report, global) = match execute(&cli) {
        Ok(v) => v,
        Err(Failure::Usage(msg)) => {
            eprintln!("bbfluct {name}: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Run(e)) => {
            eprintln!("bbfluct {name}: {e}");
            return ExitCode::from(if is_config_error(&e) { 2 } else { 1 });
        }
    };
    if let Err(e) = write_report(&report, &global) {
        eprintln!("bbfluct {name}: cannot write output: {e}");
        return ExitCode::from(2);
    }
    let failures = report.failures();
    let passed = report.assertions.len() - failures.len();
    eprintln!("{name}: {passed} passed, {} failed", failures.len());
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in failures {
            eprintln!("FAILED: {f}");
        }
        ExitCode::from(1)
    }
}
