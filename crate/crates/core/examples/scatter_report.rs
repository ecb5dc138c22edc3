//! Writes scatter SVGs and a markdown correlation table for the confounding
//! grid into a directory (default `report`).

use std::path::PathBuf;

use dta_bias::association::correlation_report;
use dta_bias::io::write_report;
use dta_bias::sim::{make_scenario_grid, run_scenario, BiasStructure};

fn main() -> dta_bias::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "report".into()));
    std::fs::create_dir_all(&dir).map_err(|e| {
        dta_bias::Error::InvalidConfig(format!("cannot create {}: {e}", dir.display()))
    })?;
    let mut estimates = Vec::new();
    for setup in make_scenario_grid(BiasStructure::Confounding) {
        estimates.extend(run_scenario(&setup, 1_000, 500, 9)?.estimates);
    }
    let correlations = correlation_report(&estimates);
    for file in write_report(&dir, "Confounding", &estimates, &correlations)? {
        println!("{}", dir.join(file).display());
    }
    Ok(())
}
