//! `rwlab`: batch front-end for the Schwarzschild scalar-wave laboratory.
//!
//! Exit codes: 0 on success (a reported semilinear blow-up counts as
//! success), 1 when the potential verifier finds the family infeasible, and
//! 2 for configuration or usage errors.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rwlab",
    version,
    about = "Scalar-wave laboratory on the Schwarzschild exterior"
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides outputs.dir from the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for per-mode evolutions (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the strongly repulsive conditions and search for shared constants.
    VerifyPotential,
    /// Tabulate the critical-point curve r(lambda), x0(lambda) over the family.
    CriticalCurve,
    /// Evolve the configured linear modes and report local-energy decay fits.
    EvolveLinear,
    /// Evolve the spherically symmetric semilinear field.
    EvolveSemilinear,
    /// Measure the scheme's convergence order on the manufactured solution.
    Convergence,
    /// Fit a power law to a column of a recorded energy CSV.
    DecayReport {
        /// Energy CSV produced by an evolve command.
        #[arg(long)]
        input: PathBuf,
        /// Column to fit.
        #[arg(long, default_value = "e_local")]
        column: String,
        /// Fit window start (default: one decade below the final time).
        #[arg(long)]
        t_lo: Option<f64>,
        /// Fit window end (default: the final recorded time).
        #[arg(long)]
        t_hi: Option<f64>,
        /// Also report the time for the series to drop by this factor.
        #[arg(long)]
        drop_factor: Option<f64>,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config error: --config <path> is required"))?;
    Ok(RunConfig::from_path(path)?)
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    match &cli.command {
        Command::VerifyPotential => {
            let cfg = load_config(cli)?;
            let out = cli.out.clone().unwrap_or_else(|| cfg.outputs.dir.clone().into());
            commands::cmd_verify_potential(&cfg, &out)
        }
        Command::CriticalCurve => {
            let cfg = load_config(cli)?;
            let out = cli.out.clone().unwrap_or_else(|| cfg.outputs.dir.clone().into());
            commands::cmd_critical_curve(&cfg, &out)
        }
        Command::EvolveLinear => {
            let cfg = load_config(cli)?;
            let out = cli.out.clone().unwrap_or_else(|| cfg.outputs.dir.clone().into());
            commands::cmd_evolve_linear(&cfg, &out)
        }
        Command::EvolveSemilinear => {
            let cfg = load_config(cli)?;
            let out = cli.out.clone().unwrap_or_else(|| cfg.outputs.dir.clone().into());
            commands::cmd_evolve_semilinear(&cfg, &out)
        }
        Command::Convergence => {
            let cfg = load_config(cli)?;
            let out = cli.out.clone().unwrap_or_else(|| cfg.outputs.dir.clone().into());
            commands::cmd_convergence(&cfg, &out)
        }
        Command::DecayReport {
            input,
            column,
            t_lo,
            t_hi,
            drop_factor,
        } => commands::cmd_decay_report(
            input,
            column,
            *t_lo,
            *t_hi,
            *drop_factor,
            cli.out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("rwlab: {e:#}");
            ExitCode::from(2)
        }
    }
}
