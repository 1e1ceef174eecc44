use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdlab::run::{execute, load_config, Mode};

/// Pseudo-spectral laboratory for the periodic Schrodinger-Debye system.
#[derive(Parser)]
#[command(name = "sdlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root seed (overrides the config's seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Split-step time integration with balance diagnostics.
    Simulate(CommonArgs),
    /// Duhamel fixed-point solve on the periodic time window.
    Picard(CommonArgs),
    /// Counting sweeps, growth fit, and restriction-constant bounds.
    Strichartz(CommonArgs),
    /// Bourgain-norm sweeps: cutoff scaling, shell norms, L^4 embedding.
    Xsb(CommonArgs),
    /// Well-posedness verdict table and exponent flags.
    Classify(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Picard(a) => (Mode::Picard, a),
        Command::Strichartz(a) => (Mode::Strichartz, a),
        Command::Xsb(a) => (Mode::Xsb, a),
        Command::Classify(a) => (Mode::Classify, a),
    };
    let config = match load_config(&args.config, mode, args.out.as_deref(), args.seed) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(&config) {
        Ok(()) => {
            println!(
                "{} run complete; reports in {}",
                mode.name(),
                config.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            let report = serde_json::json!({
                "mode": mode.name(),
                "error": e.to_string(),
                "exit_code": e.exit_code(),
            });
            let _ = std::fs::create_dir_all(&config.out_dir);
            let _ = std::fs::write(
                config.out_dir.join("error.json"),
                serde_json::to_string_pretty(&report).expect("serializes") + "\n",
            );
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
