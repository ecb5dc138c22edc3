//! One Markov chain of the hierarchical latent class model.
//!
//! Each iteration sweeps, in order:
//!
//! 1. `logit π_i`, one random-walk step per study;
//! 2. each study's logit accuracies, one scalar step per component;
//! 3. a joint shift of `μ` and every study effect of one component,
//!    which moves the location without disturbing the standardized effects;
//! 4. an exact draw of each test's `μ` given the study effects and `Σ`;
//! 5. `log σ` with the study effects held fixed, then `log σ` with the
//!    standardized effects held fixed (study effects rescaled);
//! 6. `atanh ρ` when `ρ` is free.
//!
//! Moves 3 and 5b keep the chain mobile when `σ` is small, where the
//! centered updates alone barely move `μ` and `σ`. Proposal scales adapt
//! in batches during burn-in and are frozen afterwards.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::density::{bivariate_normal_ln_pdf, logistic, logit};
use super::proposal::{accept, rw_step, AdaptiveProposal};
use super::{mu_admissible, HyperPrior, McmcConfig, ModelState, StudyModel, INDEX, REFERENCE};
use crate::error::{Error, Result};
use crate::sim::Accuracy;

const TESTS: [usize; 2] = [REFERENCE, INDEX];
const COMPONENTS: [usize; 2] = [super::SE, super::SP];
const MU_REDRAWS: usize = 1_000;

/// Chain seed for chain `chain` of a fit seeded with `seed` (SplitMix64 finalizer).
pub fn chain_seed(seed: u64, chain: usize) -> u64 {
    let mut z = seed.wrapping_add((chain as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Retained draws of one chain and its post-burn-in acceptance rates.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub samples: Vec<ModelState>,
    pub acceptance: BTreeMap<String, f64>,
}

/// Log target of `u = logit π` under a Beta(1, 1) prior, Jacobian included.
fn prevalence_log_target(ll: f64, u: f64) -> f64 {
    let p = logistic(u);
    ll + p.ln() + (1.0 - p).ln()
}

struct Proposals {
    prev: Vec<AdaptiveProposal>,
    /// `[test][component][study]`
    effects: [[Vec<AdaptiveProposal>; 2]; 2],
    shift: [[AdaptiveProposal; 2]; 2],
    sigma: [[AdaptiveProposal; 2]; 2],
    sigma_scale: [[AdaptiveProposal; 2]; 2],
    rho: [AdaptiveProposal; 2],
}

impl Proposals {
    fn new(n: usize) -> Self {
        let per_study = |s: f64| vec![AdaptiveProposal::new(s); n];
        let pair = |s: f64| [AdaptiveProposal::new(s), AdaptiveProposal::new(s)];
        Proposals {
            prev: per_study(0.2),
            effects: [
                [per_study(0.3), per_study(0.3)],
                [per_study(0.3), per_study(0.3)],
            ],
            shift: [pair(0.05), pair(0.05)],
            sigma: [pair(0.2), pair(0.2)],
            sigma_scale: [pair(0.1), pair(0.1)],
            rho: pair(0.2),
        }
    }

    fn for_each(&mut self, mut f: impl FnMut(&mut AdaptiveProposal)) {
        self.prev.iter_mut().for_each(&mut f);
        for test in self.effects.iter_mut() {
            for comp in test.iter_mut() {
                comp.iter_mut().for_each(&mut f);
            }
        }
        for group in [&mut self.shift, &mut self.sigma, &mut self.sigma_scale] {
            for test in group.iter_mut() {
                test.iter_mut().for_each(&mut f);
            }
        }
        self.rho.iter_mut().for_each(f);
    }

    fn acceptance(&self, rho_free: bool) -> BTreeMap<String, f64> {
        fn rate<'a>(props: impl IntoIterator<Item = &'a AdaptiveProposal>) -> f64 {
            let (mut tried, mut accepted) = (0u64, 0u64);
            for p in props {
                tried += p.tried;
                accepted += p.accepted;
            }
            if tried == 0 {
                0.0
            } else {
                accepted as f64 / tried as f64
            }
        }
        let mut out = BTreeMap::new();
        out.insert("prevalence".to_string(), rate(&self.prev));
        for (test, name) in [(REFERENCE, "ref"), (INDEX, "index")] {
            out.insert(
                format!("study_effects_{name}"),
                rate(self.effects[test].iter().flatten()),
            );
            out.insert(format!("mean_shift_{name}"), rate(&self.shift[test]));
            out.insert(format!("sigma_{name}"), rate(&self.sigma[test]));
            out.insert(format!("sigma_scale_{name}"), rate(&self.sigma_scale[test]));
            if rho_free {
                out.insert(format!("rho_{name}"), rate([&self.rho[test]]));
            }
        }
        out
    }
}

struct Sampler<'a, M: StudyModel + ?Sized> {
    model: &'a M,
    prior: HyperPrior,
    enforce_dv: bool,
    state: ModelState,
    prev_logit: Vec<f64>,
    ll: Vec<f64>,
    scratch_ll: Vec<f64>,
    scratch_effects: Vec<[f64; 2]>,
    props: Proposals,
}

impl<'a, M: StudyModel + ?Sized> Sampler<'a, M> {
    fn study_ll(&self, i: usize, prev: f64, reference: Accuracy, index: Accuracy) -> f64 {
        self.model.study_log_lik(i, prev, reference, index)
    }

    fn accuracies_with(&self, i: usize, test: usize, theta: [f64; 2]) -> (Accuracy, Accuracy) {
        let acc = Accuracy::new(logistic(theta[0]), logistic(theta[1]));
        if test == REFERENCE {
            (acc, self.state.accuracy(INDEX, i))
        } else {
            (self.state.accuracy(REFERENCE, i), acc)
        }
    }

    fn effect_prior(&self, test: usize, theta: [f64; 2]) -> f64 {
        bivariate_normal_ln_pdf(
            theta,
            self.state.mu[test],
            self.state.sigma[test],
            self.state.rho[test],
        )
    }

    fn effects_prior_sum(&self, test: usize, sigma: [f64; 2], rho: f64) -> f64 {
        let mu = self.state.mu[test];
        self.state.logit_acc[test]
            .iter()
            .map(|t| bivariate_normal_ln_pdf(*t, mu, sigma, rho))
            .sum()
    }

    /// Fills `scratch_ll` with every study's log likelihood when `test`'s
    /// effects are replaced by `scratch_effects`, returning the total.
    fn scratch_total(&mut self, test: usize) -> f64 {
        let mut total = 0.0;
        for i in 0..self.state.n_studies() {
            let (r, x) = self.accuracies_with(i, test, self.scratch_effects[i]);
            let ll = self.study_ll(i, self.state.prev[i], r, x);
            self.scratch_ll[i] = ll;
            total += ll;
        }
        total
    }

    fn commit_scratch(&mut self, test: usize) {
        std::mem::swap(&mut self.ll, &mut self.scratch_ll);
        self.state.logit_acc[test].copy_from_slice(&self.scratch_effects);
    }

    fn update_prevalences<R: Rng>(&mut self, rng: &mut R) {
        for i in 0..self.state.n_studies() {
            let reference = self.state.accuracy(REFERENCE, i);
            let index = self.state.accuracy(INDEX, i);
            let u = self.prev_logit[i];
            let current = prevalence_log_target(self.ll[i], u);
            let mut proposed_ll = 0.0;
            let model = self.model;
            let step = rw_step(rng, &mut self.props.prev[i], u, current, |v| {
                proposed_ll = model.study_log_lik(i, logistic(v), reference, index);
                prevalence_log_target(proposed_ll, v)
            });
            if let Some((v, _)) = step {
                self.prev_logit[i] = v;
                self.state.prev[i] = logistic(v);
                self.ll[i] = proposed_ll;
            }
        }
    }

    fn update_effects<R: Rng>(&mut self, rng: &mut R) {
        for i in 0..self.state.n_studies() {
            for test in TESTS {
                for comp in COMPONENTS {
                    let theta = self.state.logit_acc[test][i];
                    let current = self.ll[i] + self.effect_prior(test, theta);
                    let y = theta[comp] + self.props.effects[test][comp][i].increment(rng);
                    let mut proposed = theta;
                    proposed[comp] = y;
                    let (r, x) = self.accuracies_with(i, test, proposed);
                    let ll = self.study_ll(i, self.state.prev[i], r, x);
                    let target = ll + self.effect_prior(test, proposed);
                    let ok = target > f64::NEG_INFINITY && accept(rng, target - current);
                    self.props.effects[test][comp][i].record(ok);
                    if ok {
                        self.state.logit_acc[test][i] = proposed;
                        self.ll[i] = ll;
                    }
                }
            }
        }
    }

    fn total_ll(&self) -> f64 {
        self.ll.iter().sum()
    }

    fn update_mean_shift<R: Rng>(&mut self, rng: &mut R) {
        for test in TESTS {
            for comp in COMPONENTS {
                let delta = self.props.shift[test][comp].increment(rng);
                let mut mu = self.state.mu[test];
                let current = self.total_ll() + self.prior.mu_ln_pdf(mu, self.enforce_dv);
                mu[comp] += delta;
                let mu_prior = self.prior.mu_ln_pdf(mu, self.enforce_dv);
                let ok = if mu_prior == f64::NEG_INFINITY {
                    false
                } else {
                    for (dst, src) in self
                        .scratch_effects
                        .iter_mut()
                        .zip(&self.state.logit_acc[test])
                    {
                        *dst = *src;
                        dst[comp] += delta;
                    }
                    let target = self.scratch_total(test) + mu_prior;
                    target > f64::NEG_INFINITY && accept(rng, target - current)
                };
                self.props.shift[test][comp].record(ok);
                if ok {
                    self.commit_scratch(test);
                    self.state.mu[test] = mu;
                }
            }
        }
    }

    /// Exact draw of `μ` from its normal full conditional, restricted to the
    /// admissible region by rejection. Keeps the current value if no admissible
    /// draw appears within the redraw budget.
    fn draw_means<R: Rng>(&mut self, rng: &mut R) {
        for test in TESTS {
            let [s0, s1] = self.state.sigma[test];
            let rho = self.state.rho[test];
            let (a, b, c) = (s0 * s0, rho * s0 * s1, s1 * s1);
            let det = a * c - b * b;
            let n = self.state.n_studies() as f64;
            let sum = self.state.logit_acc[test]
                .iter()
                .fold([0.0, 0.0], |acc, t| [acc[0] + t[0], acc[1] + t[1]]);
            // precision n Σ⁻¹ + I / v
            let inv_v = 1.0 / self.prior.mu_variance;
            let p00 = n * c / det + inv_v;
            let p01 = -n * b / det;
            let p11 = n * a / det + inv_v;
            // Σ⁻¹ · sum
            let h0 = (c * sum[0] - b * sum[1]) / det;
            let h1 = (-b * sum[0] + a * sum[1]) / det;
            let pdet = p00 * p11 - p01 * p01;
            let (c00, c01, c11) = (p11 / pdet, -p01 / pdet, p00 / pdet);
            let mean = [c00 * h0 + c01 * h1, c01 * h0 + c11 * h1];
            let l00 = c00.sqrt();
            let l10 = c01 / l00;
            let l11 = (c11 - l10 * l10).max(0.0).sqrt();
            for _ in 0..MU_REDRAWS {
                let z0: f64 = rng.sample(StandardNormal);
                let z1: f64 = rng.sample(StandardNormal);
                let mu = [mean[0] + l00 * z0, mean[1] + l10 * z0 + l11 * z1];
                if mu_admissible(mu, self.prior.sp_mean_positive, self.enforce_dv) {
                    self.state.mu[test] = mu;
                    break;
                }
            }
        }
    }

    fn update_sigma<R: Rng>(&mut self, rng: &mut R) {
        for test in TESTS {
            for comp in COMPONENTS {
                let sigma = self.state.sigma[test];
                let rho = self.state.rho[test];
                let log_target = |this: &Self, s: [f64; 2]| {
                    let prior = this.prior.sigma.ln_pdf(s[comp]);
                    if prior == f64::NEG_INFINITY {
                        return prior;
                    }
                    this.effects_prior_sum(test, s, rho) + prior + s[comp].ln()
                };
                let current = log_target(self, sigma);
                let mut proposed = sigma;
                proposed[comp] = sigma[comp] * self.props.sigma[test][comp].increment(rng).exp();
                let target = log_target(self, proposed);
                let ok = target > f64::NEG_INFINITY && accept(rng, target - current);
                self.props.sigma[test][comp].record(ok);
                if ok {
                    self.state.sigma[test] = proposed;
                }
            }
        }
    }

    /// Rescales one component's deviations from `μ` together with its `σ`.
    /// The standardized effects are unchanged, so the move's ratio is the
    /// likelihood ratio times the prior and Jacobian of `log σ`.
    fn update_sigma_scale<R: Rng>(&mut self, rng: &mut R) {
        for test in TESTS {
            for comp in COMPONENTS {
                let sigma = self.state.sigma[test][comp];
                let factor = self.props.sigma_scale[test][comp].increment(rng).exp();
                let proposed = sigma * factor;
                let prior_new = self.prior.sigma.ln_pdf(proposed);
                let ok = if prior_new == f64::NEG_INFINITY {
                    false
                } else {
                    let current = self.total_ll() + self.prior.sigma.ln_pdf(sigma) + sigma.ln();
                    let mu = self.state.mu[test][comp];
                    for (dst, src) in self
                        .scratch_effects
                        .iter_mut()
                        .zip(&self.state.logit_acc[test])
                    {
                        *dst = *src;
                        dst[comp] = mu + factor * (src[comp] - mu);
                    }
                    let target = self.scratch_total(test) + prior_new + proposed.ln();
                    target > f64::NEG_INFINITY && accept(rng, target - current)
                };
                self.props.sigma_scale[test][comp].record(ok);
                if ok {
                    self.commit_scratch(test);
                    self.state.sigma[test][comp] = proposed;
                }
            }
        }
    }

    fn update_rho<R: Rng>(&mut self, rng: &mut R) {
        for test in TESTS {
            let rho = self.state.rho[test];
            let sigma = self.state.sigma[test];
            let log_target =
                |this: &Self, r: f64| this.effects_prior_sum(test, sigma, r) + (1.0 - r * r).ln();
            let current = log_target(self, rho);
            let z = rho.atanh() + self.props.rho[test].increment(rng);
            let proposed = z.tanh();
            let ok = proposed.abs() < 1.0 && {
                let target = log_target(self, proposed);
                target > f64::NEG_INFINITY && accept(rng, target - current)
            };
            self.props.rho[test].record(ok);
            if ok {
                self.state.rho[test] = proposed;
            }
        }
    }

    fn sweep<R: Rng>(&mut self, rng: &mut R) {
        self.update_prevalences(rng);
        self.update_effects(rng);
        self.update_mean_shift(rng);
        self.draw_means(rng);
        self.update_sigma(rng);
        self.update_sigma_scale(rng);
        if self.prior.rho_free {
            self.update_rho(rng);
        }
    }
}

fn clamp_probability(p: f64, lo: f64, hi: f64) -> f64 {
    if p.is_nan() {
        (lo + hi) / 2.0
    } else {
        p.clamp(lo, hi)
    }
}

/// Jittered start around the naive estimates. The reference test starts at
/// 0.9/0.9 because naive analysis offers no estimate of its accuracy.
fn initial_state<M: StudyModel + ?Sized, R: Rng>(
    model: &M,
    prior: &HyperPrior,
    enforce_dv: bool,
    rng: &mut R,
) -> ModelState {
    let n = model.n_studies();
    let mut jitter = |scale: f64| scale * rng.sample::<f64, _>(StandardNormal);
    let mut prev = Vec::with_capacity(n);
    let mut reference = Vec::with_capacity(n);
    let mut index = Vec::with_capacity(n);
    for i in 0..n {
        let (p, acc) = model.naive_start(i);
        let p = logistic(logit(clamp_probability(p, 0.05, 0.95)) + jitter(0.2));
        prev.push(p);
        let se = logit(clamp_probability(acc.se, 0.6, 0.97));
        let sp = logit(clamp_probability(acc.sp, 0.6, 0.97));
        index.push([se + jitter(0.2), sp + jitter(0.2)]);
        reference.push([logit(0.9) + jitter(0.3), logit(0.9) + jitter(0.3)]);
    }
    let mean = |v: &[[f64; 2]]| {
        let s = v.iter().fold([0.0, 0.0], |a, t| [a[0] + t[0], a[1] + t[1]]);
        [s[0] / n as f64, s[1] / n as f64]
    };
    let mut mu = [mean(&reference), mean(&index)];
    for m in mu.iter_mut() {
        if !mu_admissible(*m, prior.sp_mean_positive, enforce_dv) {
            *m = [logit(0.9), logit(0.9)];
        }
    }
    let mut sigma_start = || {
        let s = 0.3 * jitter(0.2).exp();
        match prior.sigma {
            super::SigmaPrior::Uniform { upper } => s.min(0.5 * upper),
            super::SigmaPrior::HalfCauchy { .. } => s,
        }
    };
    let sigma = [
        [sigma_start(), sigma_start()],
        [sigma_start(), sigma_start()],
    ];
    ModelState {
        prev,
        logit_acc: [reference, index],
        mu,
        sigma,
        rho: [0.0, 0.0],
    }
}

/// Runs one chain and returns its retained draws.
pub fn run_chain<M: StudyModel + ?Sized>(
    model: &M,
    prior: &HyperPrior,
    config: &McmcConfig,
    chain_seed: u64,
) -> Result<ChainOutput> {
    config.validate()?;
    let n = model.n_studies();
    if n == 0 {
        return Err(Error::InvalidDataset("no studies to fit".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(chain_seed);
    let state = initial_state(model, prior, config.enforce_dv_gt_1, &mut rng);
    let ll: Vec<f64> = (0..n)
        .map(|i| {
            model.study_log_lik(
                i,
                state.prev[i],
                state.accuracy(REFERENCE, i),
                state.accuracy(INDEX, i),
            )
        })
        .collect();
    let start = ll.iter().sum::<f64>() + prior.ln_density(&state, config.enforce_dv_gt_1);
    if !start.is_finite() {
        return Err(Error::NonFiniteInit(format!(
            "log posterior {start} at the initial state (log likelihoods {:?})",
            ll.iter()
                .enumerate()
                .filter(|(_, v)| !v.is_finite())
                .map(|(i, _)| model.study_id(i))
                .collect::<Vec<_>>()
        )));
    }

    let mut sampler = Sampler {
        model,
        prior: *prior,
        enforce_dv: config.enforce_dv_gt_1,
        prev_logit: state.prev.iter().map(|&p| logit(p)).collect(),
        scratch_ll: vec![0.0; n],
        scratch_effects: vec![[0.0; 2]; n],
        ll,
        state,
        props: Proposals::new(n),
    };

    let mut samples = Vec::with_capacity(config.retained());
    for iter in 0..config.n_iters {
        sampler.sweep(&mut rng);
        if iter < config.n_burnin {
            if (iter + 1) % config.adapt_window == 0 {
                sampler.props.for_each(AdaptiveProposal::adapt);
            }
            if iter + 1 == config.n_burnin {
                sampler.props.for_each(AdaptiveProposal::reset_counts);
            }
        } else if (iter - config.n_burnin + 1).is_multiple_of(config.thin) {
            samples.push(sampler.state.clone());
        }
    }

    Ok(ChainOutput {
        samples,
        acceptance: sampler.props.acceptance(prior.rho_free),
    })
}

/// Samples a single study's prevalence with everything else held fixed,
/// using the same logit random-walk kernel and adaptation as [`run_chain`].
pub fn run_prevalence_chain<F: Fn(f64) -> f64>(
    log_lik: F,
    start: f64,
    config: &McmcConfig,
    chain_seed: u64,
) -> Result<Vec<f64>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(chain_seed);
    let mut prop = AdaptiveProposal::new(0.2);
    let mut u = logit(start);
    let mut current = prevalence_log_target(log_lik(start), u);
    if !current.is_finite() {
        return Err(Error::NonFiniteInit(format!(
            "log posterior {current} at prevalence {start}"
        )));
    }
    let mut draws = Vec::with_capacity(config.retained());
    for iter in 0..config.n_iters {
        if let Some(next) = rw_step(&mut rng, &mut prop, u, current, |v| {
            prevalence_log_target(log_lik(logistic(v)), v)
        }) {
            (u, current) = next;
        }
        if iter < config.n_burnin {
            if (iter + 1) % config.adapt_window == 0 {
                prop.adapt();
            }
        } else if (iter - config.n_burnin + 1).is_multiple_of(config.thin) {
            draws.push(logistic(u));
        }
    }
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_seeds_differ() {
        let seeds: Vec<u64> = (0..4).map(|c| chain_seed(1, c)).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
        assert_eq!(chain_seed(1, 2), chain_seed(1, 2));
    }
}
