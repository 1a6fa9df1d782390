use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use afc_memory::io::{run, ExperimentConfig, ScenarioKind, RESULTS_FILE};

#[derive(Parser)]
#[command(name = "afc", version, about = "Atomic-frequency-comb memory models and fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form efficiency over a storage-time sweep
    Efficiency(Common),
    /// FFT propagation of a pulse through the comb
    Propagate(Common),
    /// Orbach, direct or hole-decay lifetime fit
    FitRelaxation(Common),
    /// Sideband equalization, burn grid and pumped comb
    DesignComb(Common),
    /// Interference visibility from a phase scan
    FitVisibility(Common),
    /// Optical depth from an efficiency-vs-storage-time curve
    FitEfficiency(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `output.dir` or `afc-out`)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Efficiency(a) => (ScenarioKind::EfficiencySweep, a),
        Command::Propagate(a) => (ScenarioKind::Propagate, a),
        Command::FitRelaxation(a) => (ScenarioKind::RelaxationFit, a),
        Command::DesignComb(a) => (ScenarioKind::CombDesign, a),
        Command::FitVisibility(a) => (ScenarioKind::VisibilityFit, a),
        Command::FitEfficiency(a) => (ScenarioKind::EfficiencyFit, a),
    };
    let outcome = ExperimentConfig::load(&args.config).and_then(|config| {
        let seed = args.seed.or(config.seed).unwrap_or(0);
        let out = args
            .out
            .clone()
            .or_else(|| config.output.dir.as_ref().map(|d| config.resolve(d)))
            .unwrap_or_else(|| PathBuf::from("afc-out"));
        let report = run(&config, kind, seed)?;
        report.write(&out)?;
        Ok((out, report))
    });
    match outcome {
        Ok((out, report)) => {
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            println!("{}", out.join(RESULTS_FILE).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
