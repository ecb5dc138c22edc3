//! Every setup of every bias structure at a reduced number of studies.

use dta_bias::association::correlation_report;
use dta_bias::sim::{make_scenario_grid, run_scenario, BiasStructure};

fn main() -> dta_bias::Result<()> {
    let studies: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(2_000);
    for structure in BiasStructure::ALL {
        println!("{structure}");
        for setup in make_scenario_grid(structure) {
            let out = run_scenario(&setup, studies, 500, 1)?;
            let r = &correlation_report(&out.estimates)[0];
            println!(
                "  {}: rho(se, prev) {:+.3}  rho(sp, prev) {:+.3}",
                setup.label,
                r.rho_se_prev.unwrap_or(f64::NAN),
                r.rho_sp_prev.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
