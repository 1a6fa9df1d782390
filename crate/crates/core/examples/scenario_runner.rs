//! Runs a configuration through the same pipeline as the `afc` binary and
//! prints the deterministic result payload.

use std::path::Path;

use afc_memory::io::{run, ExperimentConfig, ScenarioKind};

fn main() -> afc_memory::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/efficiency.toml");
    let config = ExperimentConfig::load(&path)?;
    let report = run(&config, ScenarioKind::EfficiencySweep, 0)?;
    println!("{}", report.results["peak"]);
    println!("({} output files, {:.3} s)", report.files.len() + 2, report.elapsed_s);
    Ok(())
}
