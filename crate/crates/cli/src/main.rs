use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use syncflow::batch::ExecMode;
use syncflow_cli::commands;

#[derive(Parser, Debug)]
#[command(name = "syncflow", version, about = "Simulate and verify coupled convex-gradient networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write trajectory.csv, report.json and plot.gp
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value = "syncflow-out")]
        out: PathBuf,
    },
    /// Run the scenario's checks without writing files
    Verify {
        scenario: PathBuf,
        /// Print the full report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Tabulate the tail diameter over a list of gains
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = commands::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_status().code() as u8);
    }
    let mode = ExecMode::default();
    let status = match cli.command {
        Command::Simulate { scenario, out } => commands::simulate(&scenario, &out, mode),
        Command::Verify { scenario, json } => commands::verify(&scenario, json, mode),
        Command::Sweep { scenario, k, epsilon, out } => commands::sweep(&scenario, &k, epsilon, &out, mode),
    };
    ExitCode::from(status.code() as u8)
}
