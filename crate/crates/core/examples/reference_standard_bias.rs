//! Naive meta-analyses against an imperfect reference standard: estimated
//! sensitivity rises and specificity falls with prevalence, and the
//! association vanishes when the reference is perfect.

use dta_bias::association::correlation_report;
use dta_bias::sim::{make_scenario_grid, run_scenario, BiasStructure};

fn main() -> dta_bias::Result<()> {
    let studies: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(10_000);
    for setup in make_scenario_grid(BiasStructure::ReferenceStandardError) {
        let reference = setup.reference.for_stratum(None);
        let out = run_scenario(&setup, studies, 500, 20240601)?;
        let r = &correlation_report(&out.estimates)[0];
        println!(
            "{} (reference {:.2}/{:.2}): rho(se, prev) {:+.3}  rho(sp, prev) {:+.3}",
            setup.label,
            reference.se,
            reference.sp,
            r.rho_se_prev.unwrap_or(f64::NAN),
            r.rho_sp_prev.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
