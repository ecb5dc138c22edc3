use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnostics::{gelman_rubin, median, quantile_sorted};
use super::sampler::{chain_seed, run_chain, ChainOutput};
use super::{HyperPrior, McmcConfig, ModelState, StudyModel, INDEX, REFERENCE, SE, SP};
use crate::association::spearman_rho;
use crate::error::Result;

/// R̂ at or above this value marks a fit as not converged.
pub const RHAT_THRESHOLD: f64 = 1.1;

/// Posterior summary of one scalar parameter over all pooled chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub mean: f64,
    /// Missing when there is a single chain or no within-chain variation.
    pub rhat: Option<f64>,
}

/// Posterior medians for one study. Test 1 is the reference, test 2 the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPosterior {
    pub study_id: u64,
    pub prev_med: f64,
    pub se2_med: f64,
    pub sp2_med: f64,
    pub se1_med: f64,
    pub sp1_med: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub summaries: BTreeMap<String, ParamSummary>,
    pub per_study: Vec<StudyPosterior>,
    /// Post-burn-in acceptance rate per update block, averaged over chains.
    pub acceptance: BTreeMap<String, f64>,
    /// Every gated parameter has R̂ below [`RHAT_THRESHOLD`].
    pub converged: bool,
}

impl FitResult {
    pub fn summary(&self, name: &str) -> Option<&ParamSummary> {
        self.summaries.get(name)
    }

    /// Posterior median of a monitored parameter. Panics on an unknown name.
    pub fn median(&self, name: &str) -> f64 {
        self.summaries[name].q50
    }
}

type Extract = fn(&ModelState) -> f64;

/// Monitored parameters. The flag marks those that gate convergence.
fn monitored(rho_free: bool) -> Vec<(&'static str, Extract, bool)> {
    let mut out: Vec<(&'static str, Extract, bool)> = vec![
        ("mean_se_ref", |s| s.mean_accuracy(REFERENCE).se, true),
        ("mean_sp_ref", |s| s.mean_accuracy(REFERENCE).sp, true),
        ("mean_se_index", |s| s.mean_accuracy(INDEX).se, true),
        ("mean_sp_index", |s| s.mean_accuracy(INDEX).sp, true),
        ("sigma_se_ref", |s| s.sigma[REFERENCE][SE], true),
        ("sigma_sp_ref", |s| s.sigma[REFERENCE][SP], true),
        ("sigma_se_index", |s| s.sigma[INDEX][SE], true),
        ("sigma_sp_index", |s| s.sigma[INDEX][SP], true),
    ];
    if rho_free {
        out.push(("rho_ref", |s| s.rho[REFERENCE], false));
        out.push(("rho_index", |s| s.rho[INDEX], false));
    }
    out
}

fn summarize(chains: &[Vec<f64>]) -> Result<ParamSummary> {
    let mut pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let rhat = if chains.len() >= 2 {
        gelman_rubin(chains)?
    } else {
        None
    };
    Ok(ParamSummary {
        q025: quantile_sorted(&pooled, 0.025),
        q50: quantile_sorted(&pooled, 0.5),
        q975: quantile_sorted(&pooled, 0.975),
        mean: pooled.iter().sum::<f64>() / pooled.len() as f64,
        rhat,
    })
}

/// Runs `config.n_chains` chains in parallel and summarizes the pooled draws.
pub fn fit<M: StudyModel + ?Sized>(
    model: &M,
    prior: &HyperPrior,
    config: &McmcConfig,
    model_name: &str,
) -> Result<FitResult> {
    config.validate()?;
    let outputs: Vec<ChainOutput> = (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_chain(model, prior, config, chain_seed(config.seed, c)))
        .collect::<Result<_>>()?;
    log::debug!(
        "{model_name}: {} chains, {} draws each",
        outputs.len(),
        config.retained()
    );

    let mut summaries = BTreeMap::new();
    let mut converged = outputs.len() >= 2;
    for (name, extract, gated) in monitored(prior.rho_free) {
        let chains: Vec<Vec<f64>> = outputs
            .iter()
            .map(|o| o.samples.iter().map(extract).collect())
            .collect();
        let s = summarize(&chains)?;
        if gated && !s.rhat.is_some_and(|r| r < RHAT_THRESHOLD) {
            converged = false;
        }
        summaries.insert(name.to_string(), s);
    }

    let draws: Vec<&ModelState> = outputs.iter().flat_map(|o| &o.samples).collect();
    let per_study = (0..model.n_studies())
        .map(|i| {
            let med = |f: &dyn Fn(&ModelState) -> f64| {
                median(&draws.iter().map(|s| f(s)).collect::<Vec<_>>())
            };
            StudyPosterior {
                study_id: model.study_id(i),
                prev_med: med(&|s| s.prev[i]),
                se2_med: med(&|s| s.accuracy(INDEX, i).se),
                sp2_med: med(&|s| s.accuracy(INDEX, i).sp),
                se1_med: med(&|s| s.accuracy(REFERENCE, i).se),
                sp1_med: med(&|s| s.accuracy(REFERENCE, i).sp),
            }
        })
        .collect();

    let mut acceptance = BTreeMap::new();
    for o in &outputs {
        for (k, v) in &o.acceptance {
            *acceptance.entry(k.clone()).or_insert(0.0) += v / outputs.len() as f64;
        }
    }

    Ok(FitResult {
        model: model_name.to_string(),
        summaries,
        per_study,
        acceptance,
        converged,
    })
}

/// Spearman correlations of per-study posterior-median index sensitivity and
/// specificity with posterior-median prevalence.
pub fn adjusted_association(fit: &FitResult) -> Result<(Option<f64>, Option<f64>)> {
    let prev: Vec<Option<f64>> = fit.per_study.iter().map(|s| Some(s.prev_med)).collect();
    let se: Vec<Option<f64>> = fit.per_study.iter().map(|s| Some(s.se2_med)).collect();
    let sp: Vec<Option<f64>> = fit.per_study.iter().map(|s| Some(s.sp2_med)).collect();
    Ok((spearman_rho(&se, &prev)?, spearman_rho(&sp, &prev)?))
}
