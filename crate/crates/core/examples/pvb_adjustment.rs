//! Fits the two-stage verification model to 100 studies in which only some
//! index-negative subjects were verified by an imperfect reference.
//!
//! Pass a smaller iteration count as the first argument for a quick run.

use dta_bias::association::correlation_report;
use dta_bias::mcmc::McmcConfig;
use dta_bias::pvb::{adjusted_association, fit_pvb, PvbMetaDataset};
use dta_bias::sim::{make_scenario_grid, run_scenario, BiasStructure};

fn main() -> dta_bias::Result<()> {
    let iters: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(50_000);
    let setup = &make_scenario_grid(BiasStructure::PartialVerification)[0];
    let sim = run_scenario(setup, 100, 500, 11)?;
    let naive = &correlation_report(&sim.estimates)[0];
    println!(
        "complete-case: rho(se, prev) {:+.3}  rho(sp, prev) {:+.3}",
        naive.rho_se_prev.unwrap_or(f64::NAN),
        naive.rho_sp_prev.unwrap_or(f64::NAN)
    );

    let dataset = PvbMetaDataset::from_tables(sim.tables.iter().map(|t| t.verification).collect())?;
    let config = McmcConfig {
        n_iters: iters,
        n_burnin: iters / 2,
        ..McmcConfig::default()
    };
    let fit = fit_pvb(&dataset, &config)?;
    let (se, sp) = adjusted_association(&fit)?;
    println!(
        "adjusted:      rho(se, prev) {:+.3}  rho(sp, prev) {:+.3}",
        se.unwrap_or(f64::NAN),
        sp.unwrap_or(f64::NAN)
    );
    for (name, s) in &fit.summaries {
        println!(
            "{name:>15} {:.3} [{:.3}, {:.3}] rhat {}",
            s.q50,
            s.q025,
            s.q975,
            s.rhat.map_or("-".into(), |r| format!("{r:.3}"))
        );
    }
    println!("converged: {}", fit.converged);
    Ok(())
}
