//! Runs chains one at a time and computes the scale reduction factor of the
//! mean index sensitivity by hand, then shows how a short burn-in inflates it.

use dta_bias::lcbm::{self, MetaDataset};
use dta_bias::mcmc::{chain_seed, gelman_rubin, McmcConfig, INDEX};
use dta_bias::sim::{make_scenario_grid, run_scenario, BiasStructure};

fn main() -> dta_bias::Result<()> {
    let setup = &make_scenario_grid(BiasStructure::ReferenceStandardError)[0];
    let sim = run_scenario(setup, 50, 500, 5)?;
    let dataset = MetaDataset::from_tables(sim.tables.iter().map(|t| t.pooled).collect())?;

    for (iters, burnin) in [(400, 10), (10_000, 5_000)] {
        let config = McmcConfig {
            n_iters: iters,
            n_burnin: burnin,
            thin: 1,
            ..McmcConfig::default()
        };
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|c| {
                let draws = lcbm::run_chain(&dataset, &config, chain_seed(config.seed, c))?;
                Ok(draws.iter().map(|s| s.mean_accuracy(INDEX).se).collect())
            })
            .collect::<dta_bias::Result<_>>()?;
        let rhat = gelman_rubin(&chains)?;
        println!(
            "{iters} iterations, {burnin} burn-in: R-hat {}",
            rhat.map_or("not assessable".into(), |r| format!("{r:.4}"))
        );
    }
    Ok(())
}
