use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dicke::entanglement::{RoofOptions, DEFAULT_BUDGET, DEFAULT_RESTARTS};
use dicke_cli::run::{self, Completed};
use dicke_cli::CliError;

#[derive(Parser)]
#[command(name = "dicke", version, about = "Cavity-QED W-state experiments: simulate, reconstruct, certify")]
struct Cli {
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a device preset as a re-loadable JSON file.
    ExportPreset {
        name: String,
        /// Destination file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct a 3-qubit state from a 64-row records CSV.
    Reconstruct {
        #[arg(long)]
        records: PathBuf,
        /// JSON array of the 8 readout coefficients.
        #[arg(long)]
        readout: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Fidelity, witness and tangle bound of a density-matrix file.
    Certify {
        #[arg(long)]
        density: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
}

fn roof(seed: u64, restarts: usize, budget: usize) -> Result<RoofOptions, CliError> {
    if restarts == 0 || budget == 0 {
        return Err(CliError::config("restarts and budget must be at least 1"));
    }
    Ok(RoofOptions { restarts, budget, seed })
}

fn execute(command: Command, quiet: bool) -> Result<(), CliError> {
    let done: Completed = match command {
        Command::Run { config, out, seed } => run::run(&config, out.as_deref(), seed)?,
        Command::ExportPreset { name, out } => {
            let text = run::export_preset(&name)?;
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?,
                None => print!("{text}"),
            }
            return Ok(());
        }
        Command::Reconstruct { records, readout, out, seed, restarts, budget } => {
            run::reconstruct_records(&records, readout.as_deref(), &out, roof(seed, restarts, budget)?)?
        }
        Command::Certify { density, out, seed, restarts, budget } => {
            run::certify_file(&density, &out, roof(seed, restarts, budget)?)?
        }
    };
    if !quiet {
        for line in &done.summary {
            println!("{line}");
        }
        println!(
            "{} artifacts in {} ({:.2} s)",
            done.manifest.artifacts.len(),
            done.out_dir.display(),
            done.manifest.wall_time_s
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command, cli.quiet) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
