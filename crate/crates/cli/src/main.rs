use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lbhga_cli::{run_experiment, CliError, Config, Instance, Overrides};
use lbhga_core::sim::Algorithm;

#[derive(Parser)]
#[command(name = "lbhga", version, about = "Multi-domain virtual network embedding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every configured algorithm and seed and write metrics CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run this seed only.
        #[arg(long)]
        seed: Option<u64>,
        /// Run this algorithm only.
        #[arg(long)]
        algorithm: Option<Algorithm>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replay a dumped instance instead of generating one per seed.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Write the substrate and request stream generated for a seed.
    DumpInstance {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, seed, algorithm, out, instance } => {
            let mut cfg = Config::load(&config)?;
            cfg.apply(&Overrides { seed, algorithm, out_dir: out });
            let instance = instance.as_deref().map(Instance::load).transpose()?;
            let report = run_experiment(&cfg, instance.as_ref())?;
            print!("{}", report.table);
            println!("wrote {} files to {}", report.files.len(), cfg.experiment.out_dir.display());
        }
        Command::DumpInstance { config, seed, out } => {
            let cfg = Config::load(&config)?;
            Instance::generate(&cfg, seed)?.save(&out)?;
        }
    }
    Ok(())
}
