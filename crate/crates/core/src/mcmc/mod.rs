//! Metropolis-within-Gibbs machinery shared by the latent class models.
//!
//! Both models have the same hierarchical layer. Each study `i` has a
//! prevalence `π_i` and, for each test, a pair of logit accuracies
//! `(θ_S, θ_C) ~ N(μ, Σ)` with `Σ` built from `(σ_S, σ_C, ρ)`. They differ
//! only in the per-study likelihood and in the hyperpriors, which are
//! supplied through [`StudyModel`] and [`HyperPrior`].

pub mod density;
pub mod diagnostics;
pub mod proposal;
mod sampler;
mod summary;

pub use diagnostics::{gelman_rubin, median, quantile_sorted};
pub use sampler::{chain_seed, run_chain, run_prevalence_chain, ChainOutput};
pub use summary::{adjusted_association, fit, FitResult, ParamSummary, StudyPosterior};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Accuracy;
use density::{bivariate_normal_ln_pdf, half_cauchy_ln_pdf, logistic, normal_ln_pdf};

/// Test slot of the reference standard.
pub const REFERENCE: usize = 0;
/// Test slot of the index test.
pub const INDEX: usize = 1;
/// Component slot of the logit sensitivity.
pub const SE: usize = 0;
/// Component slot of the logit specificity.
pub const SP: usize = 1;

/// Per-study likelihood of a latent class model.
pub trait StudyModel: Sync {
    fn n_studies(&self) -> usize;

    fn study_id(&self, study: usize) -> u64;

    /// Log likelihood of one study, constants omitted.
    fn study_log_lik(&self, study: usize, prev: f64, reference: Accuracy, index: Accuracy) -> f64;

    /// Naive prevalence and index accuracy used to start the chains.
    fn naive_start(&self, study: usize) -> (f64, Accuracy);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaPrior {
    HalfCauchy { scale: f64 },
    Uniform { upper: f64 },
}

impl SigmaPrior {
    pub fn ln_pdf(&self, sigma: f64) -> f64 {
        match *self {
            SigmaPrior::HalfCauchy { scale } => half_cauchy_ln_pdf(sigma, scale),
            SigmaPrior::Uniform { upper } => {
                if sigma > 0.0 && sigma < upper {
                    -upper.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// Priors on the population-level parameters of both tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPrior {
    /// Variance of the normal prior on each component of `μ`.
    pub mu_variance: f64,
    /// Truncate the logit specificity means to positive values.
    pub sp_mean_positive: bool,
    pub sigma: SigmaPrior,
    /// `ρ ~ Uniform(−1, 1)` when true, otherwise `ρ = 0`.
    pub rho_free: bool,
}

impl HyperPrior {
    /// Log prior of one test's mean vector, −∞ outside the admissible region.
    pub fn mu_ln_pdf(&self, mu: [f64; 2], enforce_dv_gt_1: bool) -> f64 {
        if !mu_admissible(mu, self.sp_mean_positive, enforce_dv_gt_1) {
            return f64::NEG_INFINITY;
        }
        normal_ln_pdf(mu[SE], 0.0, self.mu_variance) + normal_ln_pdf(mu[SP], 0.0, self.mu_variance)
    }

    /// Full log prior of a state, up to an additive constant.
    ///
    /// Prevalences are Beta(1, 1) and contribute nothing inside (0, 1).
    pub fn ln_density(&self, state: &ModelState, enforce_dv_gt_1: bool) -> f64 {
        if state.prev.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for test in [REFERENCE, INDEX] {
            let rho = state.rho[test];
            if !(rho > -1.0 && rho < 1.0) || (!self.rho_free && rho != 0.0) {
                return f64::NEG_INFINITY;
            }
            total += self.mu_ln_pdf(state.mu[test], enforce_dv_gt_1);
            for &s in &state.sigma[test] {
                total += self.sigma.ln_pdf(s);
            }
            if total == f64::NEG_INFINITY {
                return total;
            }
            for theta in &state.logit_acc[test] {
                total += bivariate_normal_ln_pdf(*theta, state.mu[test], state.sigma[test], rho);
            }
        }
        total
    }
}

/// `logistic(a) + logistic(b) > 1` exactly when `a + b > 0`.
pub fn mu_admissible(mu: [f64; 2], sp_mean_positive: bool, enforce_dv_gt_1: bool) -> bool {
    (!sp_mean_positive || mu[SP] > 0.0) && (!enforce_dv_gt_1 || mu[SE] + mu[SP] > 0.0)
}

/// One draw of every model parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub prev: Vec<f64>,
    /// `[test][study] = [logit Se, logit Sp]`.
    pub logit_acc: [Vec<[f64; 2]>; 2],
    pub mu: [[f64; 2]; 2],
    pub sigma: [[f64; 2]; 2],
    pub rho: [f64; 2],
}

impl ModelState {
    pub fn n_studies(&self) -> usize {
        self.prev.len()
    }

    pub fn accuracy(&self, test: usize, study: usize) -> Accuracy {
        let [s, c] = self.logit_acc[test][study];
        Accuracy::new(logistic(s), logistic(c))
    }

    /// Accuracy at the population means `logistic(μ)`.
    pub fn mean_accuracy(&self, test: usize) -> Accuracy {
        let [s, c] = self.mu[test];
        Accuracy::new(logistic(s), logistic(c))
    }

    pub fn log_likelihood<M: StudyModel + ?Sized>(&self, model: &M) -> f64 {
        (0..model.n_studies())
            .map(|i| {
                model.study_log_lik(
                    i,
                    self.prev[i],
                    self.accuracy(REFERENCE, i),
                    self.accuracy(INDEX, i),
                )
            })
            .sum()
    }

    pub fn check_dimensions(&self, n_studies: usize) -> Result<()> {
        if self.prev.len() != n_studies || self.logit_acc.iter().any(|t| t.len() != n_studies) {
            return Err(Error::LengthMismatch {
                left: n_studies,
                right: self.prev.len(),
            });
        }
        Ok(())
    }
}

/// Sampler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    pub n_chains: usize,
    /// Iterations per chain, burn-in included.
    pub n_iters: usize,
    pub n_burnin: usize,
    pub thin: usize,
    /// Iterations per adaptation batch during burn-in.
    pub adapt_window: usize,
    pub seed: u64,
    pub enforce_dv_gt_1: bool,
    /// Overrides the model's default treatment of `ρ` (free for the
    /// bivariate model, fixed at 0 for the verification model).
    pub rho_free: Option<bool>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_chains: 3,
            n_iters: 50_000,
            n_burnin: 25_000,
            thin: 5,
            adapt_window: 50,
            seed: 20_250_807,
            enforce_dv_gt_1: true,
            rho_free: None,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_chains == 0 {
            return bad("at least one chain is required");
        }
        if self.n_burnin >= self.n_iters {
            return bad("burn-in must be shorter than the chain");
        }
        if self.thin == 0 {
            return bad("thin must be at least 1");
        }
        if self.adapt_window == 0 {
            return bad("adapt_window must be at least 1");
        }
        if self.retained() == 0 {
            return bad("no draws are retained after burn-in and thinning");
        }
        Ok(())
    }

    /// Draws kept per chain.
    pub fn retained(&self) -> usize {
        self.n_iters.saturating_sub(self.n_burnin) / self.thin.max(1)
    }
}
