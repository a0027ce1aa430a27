//! `bqwave` — traveling-wave solver for the reactive Boussinesq channel
//! system: thinness-condition evaluation, homotopy solves with continuation
//! in the window length, parameter sweeps and state re-audits.

mod bundle;
mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "bqwave",
    version,
    about = "Traveling waves of the reactive Boussinesq system in a 3D channel"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the relative thinness condition for a configuration.
    CheckCondition { config: PathBuf },
    /// Run the homotopy solve (with continuation in a) and audit the result.
    Solve { config: PathBuf },
    /// Independent solves over one parameter axis; emits a summary CSV.
    Sweep {
        config: PathBuf,
        /// One of: a, nu, rho, k, lz.
        #[arg(long)]
        axis: String,
        /// Comma-separated values for the axis.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Re-run the audits on a dumped state bundle.
    Verify { state_dir: PathBuf },
    /// Print the decoupled planar closed form and its root-found speeds.
    Planar { config: PathBuf },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::CheckCondition { config } => commands::cmd_check_condition(&config),
        Cmd::Solve { config } => commands::cmd_solve(&config),
        Cmd::Sweep {
            config,
            axis,
            values,
        } => commands::cmd_sweep(&config, &axis, &values),
        Cmd::Verify { state_dir } => commands::cmd_verify(&state_dir),
        Cmd::Planar { config } => commands::cmd_planar(&config),
    };
    std::process::exit(code);
}
