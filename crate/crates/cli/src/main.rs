//! `vaet`: spectra, traces, vibronic sweeps, perturbative tables and
//! convergence studies for the donor–bridge–acceptor trimer.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{RunConfig, WORKERS_ENV};
use crate::error::{CliError, Result};
use crate::output::Artifacts;

#[derive(Parser)]
#[command(name = "vaet", version, about = "Vibrationally assisted energy transfer in a trimer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Max/Int[P3] over a (nu_a, nu_b) grid, with line classification and a heatmap.
    Spectrum2d(RunArgs),
    /// P3(t) and Tr rho(t) for one or more parameter sets.
    Trace(RunArgs),
    /// Eigenvalues swept over nu_a and the avoided crossings between them.
    Vibronic(RunArgs),
    /// Perturbative term tables with an exact comparison column.
    Perturb(RunArgs),
    /// Traces at several Fock truncations and their deviations.
    Convergence(RunArgs),
    /// Parse and validate a configuration, then print it fully resolved.
    Check(RunArgs),
    /// Print the built-in parameter presets.
    Presets {
        #[arg(long, value_enum, default_value_t = Format::Toml)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Toml,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override any scalar key, e.g. `--set system.mode_a.kappa=0.03`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to `workers` in the config, then the environment.
    #[arg(short = 'j', long, long_help = format!("Worker threads. Precedence: this flag, `workers` in the config, ${WORKERS_ENV}, all cores."))]
    workers: Option<usize>,
}

type Runner = fn(&RunConfig, &mut Artifacts) -> Result<String>;

fn run(name: &'static str, args: &RunArgs, runner: Runner) -> Result<String> {
    let cfg = RunConfig::load(args.config.as_deref(), &args.set)?;
    cfg.validate()?;
    let workers = cfg.workers(args.workers)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let resolved = cfg.resolved(workers, &out);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let mut art = Artifacts::create(&out, name, &resolved)?;
    let summary = pool.install(|| runner(&resolved, &mut art))?;
    let files: Vec<String> = art.written().iter().map(|p| p.display().to_string()).collect();
    Ok(format!("{summary}\nwrote {}", files.join(", ")))
}

fn check(args: &RunArgs) -> Result<String> {
    let cfg = RunConfig::load(args.config.as_deref(), &args.set)?;
    cfg.validate()?;
    let workers = cfg.workers(args.workers)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok(cfg.resolved(workers, &out).to_toml().trim_end().to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum2d(a) => run("spectrum2d", a, commands::spectrum2d),
        Command::Trace(a) => run("trace", a, commands::trace),
        Command::Vibronic(a) => run("vibronic", a, commands::vibronic),
        Command::Perturb(a) => run("perturb", a, commands::perturb),
        Command::Convergence(a) => run("convergence", a, commands::convergence),
        Command::Check(a) => check(a),
        Command::Presets { format } => Ok(commands::presets(matches!(format, Format::Json)).trim_end().to_string()),
    };
    match result {
        Ok(text) => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("vaet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
