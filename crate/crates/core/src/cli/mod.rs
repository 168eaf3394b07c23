//! The `qprob` command-line front end.
//!
//! ```text
//! qprob <discrete|grid|grid2d|fock|evolve|noncomm> --config <path> [--out <path>] [--format json|csv] [--seed N] [--timing]
//! qprob verify [--seed N] [--max-dim D] [--only SUITE]
//! ```
//!
//! Exit codes: 0 success, 1 verification or computation failure, 2 config error.

pub mod config;
pub mod report;

mod commands;
mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::tolerance;
use commands::{CommandError, Context};
use config::{Format, SystemConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qprob", version, about = "Conditional expectation and probability of quantum observables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Discrete spectrum: eigenvalues and amplitudes, or the oscillator preset.
    Discrete(RunArgs),
    /// Continuous spectrum on a uniform 1D grid.
    Grid(RunArgs),
    /// Joint position distribution on a 2D grid.
    Grid2d(RunArgs),
    /// Grand-canonical ensemble of non-interacting bosons or fermions.
    Fock(RunArgs),
    /// Time series of CE, AP and CP under a finite Hamiltonian.
    Evolve(RunArgs),
    /// Momentum conditioned on position: divergence study and quasi-probabilities.
    Noncomm(RunArgs),
    /// Run the built-in property suites.
    Verify(verify::VerifyArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's `format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Overrides the config's `seed`; recorded in the report.
    #[arg(long)]
    seed: Option<u64>,
    /// Add wall-clock timings to the report (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let scale = match tolerance::scale_from_env() {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("qprob: {msg}");
            return EXIT_CONFIG;
        }
    };
    match cli.command {
        Command::Discrete(a) => run_system("discrete", a, scale),
        Command::Grid(a) => run_system("grid1d", a, scale),
        Command::Grid2d(a) => run_system("grid2d", a, scale),
        Command::Fock(a) => run_system("fock", a, scale),
        Command::Evolve(a) => run_system("evolve", a, scale),
        Command::Noncomm(a) => run_system("noncomm", a, scale),
        Command::Verify(a) => verify::run(&a, scale),
    }
}

fn run_system(kind: &str, args: RunArgs, scale: f64) -> i32 {
    let loaded = match config::load_config(&args.config) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("qprob: {}: {e}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    let cfg = &loaded.config;
    if cfg.system.kind() != kind {
        eprintln!("qprob: {}: system kind is {:?}, this subcommand expects {kind:?}", args.config.display(), cfg.system.kind());
        return EXIT_CONFIG;
    }
    let ctx = Context {
        config_bytes: loaded.bytes.clone(),
        base_dir: loaded.base_dir.clone(),
        seed: args.seed.or(cfg.seed),
        scale,
        timing: args.timing,
        route_override: cfg.tolerance.route,
    };
    let result = match &cfg.system {
        SystemConfig::Discrete(d) => commands::cmd_discrete(&ctx, cfg, d),
        SystemConfig::Grid1d(g) => commands::cmd_grid(&ctx, cfg, g),
        SystemConfig::Grid2d(g) => commands::cmd_grid2d(&ctx, cfg, g),
        SystemConfig::Fock(f) => commands::cmd_fock(&ctx, cfg, f),
        SystemConfig::Evolve(e) => commands::cmd_evolve(&ctx, cfg, e),
        SystemConfig::Noncomm(n) => commands::cmd_noncomm(&ctx, cfg, n),
    };
    let output = match result {
        Ok(o) => o,
        Err(CommandError::Config(msg)) => {
            eprintln!("qprob: {}: {msg}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    let text = match args.format.or(cfg.format).unwrap_or(Format::Json) {
        Format::Json => output.envelope.to_json(),
        Format::Csv => output.csv.clone().unwrap_or_else(|| output.envelope.to_csv()),
    };
    let written = match &args.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| format!("cannot write stdout: {e}")),
    };
    if let Err(msg) = written {
        eprintln!("qprob: {msg}");
        return EXIT_CONFIG;
    }
    if output.ok {
        EXIT_OK
    } else {
        eprintln!("qprob: one or more checks failed; see the report");
        EXIT_FAILURE
    }
}
