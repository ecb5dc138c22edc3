//! Two-stage verification model: every subject receives the index test,
//! and only some of them, chosen by their index result, receive the
//! reference standard.
//!
//! Stage 1 is binomial in the number of index positives. Stage 2 is
//! binomial in the reference positives among the verified subjects of each
//! index arm. Verified counts enter only as denominators, so verification is
//! treated as ignorable given the index result.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::mcmc::density::xlogy;
use crate::mcmc::{self, HyperPrior, McmcConfig, ModelState, SigmaPrior, StudyModel};
use crate::sim::{Accuracy, VerificationTable};

pub use crate::mcmc::{adjusted_association, FitResult};

/// Hyperpriors of the verification model.
pub const PVB_PRIOR: HyperPrior = HyperPrior {
    mu_variance: 100.0,
    sp_mean_positive: true,
    sigma: SigmaPrior::Uniform { upper: 2.0 },
    rho_free: false,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageProbabilities {
    /// P(index positive).
    pub p1: f64,
    /// P(reference positive | index positive).
    pub q1: f64,
    /// P(reference positive | index negative).
    pub q0: f64,
}

/// Joint probabilities `[P(T+, R+), P(T+), P(T−, R+)]` for index result T and reference result R.
fn joint(prev: f64, index: Accuracy, reference: Accuracy) -> [f64; 3] {
    let p1 = prev * index.se + (1.0 - prev) * (1.0 - index.sp);
    let j11 =
        prev * index.se * reference.se + (1.0 - prev) * (1.0 - index.sp) * (1.0 - reference.sp);
    let j01 =
        prev * (1.0 - index.se) * reference.se + (1.0 - prev) * index.sp * (1.0 - reference.sp);
    [j11, p1, j01]
}

pub fn stage_probs(prev: f64, index: Accuracy, reference: Accuracy) -> Result<StageProbabilities> {
    check_probability("prevalence", prev)?;
    check_probability("index sensitivity", index.se)?;
    check_probability("index specificity", index.sp)?;
    check_probability("reference sensitivity", reference.se)?;
    check_probability("reference specificity", reference.sp)?;
    let [j11, p1, j01] = joint(prev, index, reference);
    if p1 <= 0.0 || p1 >= 1.0 {
        return Err(Error::DegenerateInput(format!(
            "P(index positive) = {p1}; the conditional stage probabilities are undefined"
        )));
    }
    Ok(StageProbabilities {
        p1,
        q1: j11 / p1,
        q0: j01 / (1.0 - p1),
    })
}

/// Log likelihood of one verification table without binomial constants.
pub fn table_log_likelihood(
    table: &VerificationTable,
    prev: f64,
    index: Accuracy,
    reference: Accuracy,
) -> f64 {
    let [j11, p1, j01] = joint(prev, index, reference);
    let (q1, q0) = (j11 / p1, j01 / (1.0 - p1));
    let n0 = (table.n_total - table.n1) as f64;
    let ll = xlogy(table.n1 as f64, p1)
        + xlogy(n0, 1.0 - p1)
        + xlogy(table.x1 as f64, q1)
        + xlogy((table.v1 - table.x1) as f64, 1.0 - q1)
        + xlogy(table.x0 as f64, q0)
        + xlogy((table.v0 - table.x0) as f64, 1.0 - q0);
    if ll.is_nan() {
        f64::NEG_INFINITY
    } else {
        ll
    }
}

/// One verification table per study.
#[derive(Debug, Clone, PartialEq)]
pub struct PvbMetaDataset {
    study_ids: Vec<u64>,
    tables: Vec<VerificationTable>,
}

impl PvbMetaDataset {
    pub fn new(study_ids: Vec<u64>, tables: Vec<VerificationTable>) -> Result<Self> {
        if study_ids.len() != tables.len() {
            return Err(Error::LengthMismatch {
                left: study_ids.len(),
                right: tables.len(),
            });
        }
        if tables.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "{} studies; at least 2 are required",
                tables.len()
            )));
        }
        for (id, t) in study_ids.iter().zip(&tables) {
            if !t.is_consistent() {
                return Err(Error::InvalidDataset(format!(
                    "study {id}: inconsistent verification counts {t:?}"
                )));
            }
            if t.n_total == 0 {
                return Err(Error::InvalidDataset(format!("study {id} has no subjects")));
            }
        }
        Ok(PvbMetaDataset { study_ids, tables })
    }

    pub fn from_tables(tables: Vec<VerificationTable>) -> Result<Self> {
        let ids = (1..=tables.len() as u64).collect();
        Self::new(ids, tables)
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn study_ids(&self) -> &[u64] {
        &self.study_ids
    }

    pub fn tables(&self) -> &[VerificationTable] {
        &self.tables
    }
}

impl StudyModel for PvbMetaDataset {
    fn n_studies(&self) -> usize {
        self.tables.len()
    }

    fn study_id(&self, study: usize) -> u64 {
        self.study_ids[study]
    }

    fn study_log_lik(&self, study: usize, prev: f64, reference: Accuracy, index: Accuracy) -> f64 {
        table_log_likelihood(&self.tables[study], prev, index, reference)
    }

    /// Complete-case estimates from the verified subjects.
    fn naive_start(&self, study: usize) -> (f64, Accuracy) {
        let t = self.tables[study].verified_table();
        let prev = t.ref_positive() as f64 / t.n() as f64;
        let se = t.n_pp as f64 / t.ref_positive() as f64;
        let sp = t.n_nn as f64 / t.ref_negative() as f64;
        (prev, Accuracy::new(se, sp))
    }
}

pub fn pvb_log_likelihood(dataset: &PvbMetaDataset, state: &ModelState) -> Result<f64> {
    state.check_dimensions(dataset.len())?;
    Ok(state.log_likelihood(dataset))
}

fn prior_for(config: &McmcConfig) -> HyperPrior {
    HyperPrior {
        rho_free: config.rho_free.unwrap_or(PVB_PRIOR.rho_free),
        ..PVB_PRIOR
    }
}

pub fn fit_pvb(dataset: &PvbMetaDataset, config: &McmcConfig) -> Result<FitResult> {
    mcmc::fit(dataset, &prior_for(config), config, "pvb")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcbm;
    use crate::sim::TwoByTwoTable;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stage_probabilities_example() {
        let s = stage_probs(0.5, Accuracy::new(0.7, 0.95), Accuracy::new(0.9, 0.9)).unwrap();
        assert_abs_diff_eq!(s.p1, 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q1, 0.3175 / 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q0, 0.1825 / 0.625, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q1, 0.84667, epsilon = 1e-5);
        assert_abs_diff_eq!(s.q0, 0.292, epsilon = 1e-12);
    }

    #[test]
    fn perfect_reference_collapse() {
        let index = Accuracy::new(0.8, 0.7);
        let s = stage_probs(0.3, index, Accuracy::PERFECT).unwrap();
        assert_abs_diff_eq!(s.q1, 0.3 * 0.8 / s.p1, epsilon = 1e-15);
        assert_abs_diff_eq!(s.q0, 0.3 * 0.2 / (1.0 - s.p1), epsilon = 1e-15);
    }

    #[test]
    fn degenerate_first_stage() {
        let r = stage_probs(1.0, Accuracy::new(1.0, 0.9), Accuracy::new(0.9, 0.9));
        assert!(matches!(r, Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn first_stage_term() {
        // prev 0.5 with index (0.7, 0.95) gives p1 = 0.375
        let t = VerificationTable {
            n_total: 10,
            n1: 4,
            v1: 0,
            v0: 0,
            x1: 0,
            x0: 0,
        };
        let ll = table_log_likelihood(&t, 0.5, Accuracy::new(0.7, 0.95), Accuracy::new(0.9, 0.9));
        assert_abs_diff_eq!(
            ll,
            4.0 * 0.375f64.ln() + 6.0 * 0.625f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn impossible_second_stage() {
        // perfect tests make q1 = 0 when prevalence is 0
        let t = VerificationTable {
            n_total: 4,
            n1: 2,
            v1: 2,
            v0: 0,
            x1: 1,
            x0: 0,
        };
        let ll = table_log_likelihood(&t, 1e-300, Accuracy::new(0.9, 0.9), Accuracy::PERFECT);
        assert!(ll < -600.0);
        let ll = table_log_likelihood(&t, 0.0, Accuracy::new(0.9, 0.9), Accuracy::PERFECT);
        assert_eq!(ll, f64::NEG_INFINITY);
    }

    #[test]
    fn fully_verified_matches_bivariate_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let t = TwoByTwoTable::new(
                rng.random_range(0..20),
                rng.random_range(0..20),
                rng.random_range(0..20),
                rng.random_range(0..20),
            );
            let v = VerificationTable::fully_verified(&t);
            let prev = rng.random_range(0.01..0.99);
            let reference = Accuracy::new(rng.random_range(0.5..0.99), rng.random_range(0.5..0.99));
            let index = Accuracy::new(rng.random_range(0.5..0.99), rng.random_range(0.5..0.99));
            let a = table_log_likelihood(&v, prev, index, reference);
            let b = lcbm::table_log_likelihood(&t, prev, reference, index);
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }
}
