//! Latent class bivariate meta-analysis of an index test against an
//! imperfect reference standard.
//!
//! Each study's two-by-two table is multinomial with cell probabilities that
//! mix over the latent condition, assuming the two tests are conditionally
//! independent given it. Test slot 1 is always the reference and slot 2 the
//! index test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::mcmc::density::xlogy;
use crate::mcmc::{self, HyperPrior, McmcConfig, ModelState, SigmaPrior, StudyModel};
use crate::sim::{Accuracy, TwoByTwoTable};

pub use crate::mcmc::{adjusted_association, FitResult};

/// Hyperpriors of the bivariate model.
pub const LCBM_PRIOR: HyperPrior = HyperPrior {
    mu_variance: 2.0,
    sp_mean_positive: false,
    sigma: SigmaPrior::HalfCauchy { scale: 16.0 },
    rho_free: true,
};

/// Joint outcome probabilities. The first digit is the reference result,
/// the second the index result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellProbabilities {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl CellProbabilities {
    /// Same order as [`TwoByTwoTable::cells_by_reference`].
    pub fn as_array(&self) -> [f64; 4] {
        [self.p11, self.p10, self.p01, self.p00]
    }
}

fn cells_unchecked(prev: f64, reference: Accuracy, index: Accuracy) -> [f64; 4] {
    let (s1, c1, s2, c2) = (reference.se, reference.sp, index.se, index.sp);
    [
        prev * s1 * s2 + (1.0 - prev) * (1.0 - c1) * (1.0 - c2),
        prev * s1 * (1.0 - s2) + (1.0 - prev) * (1.0 - c1) * c2,
        prev * (1.0 - s1) * s2 + (1.0 - prev) * c1 * (1.0 - c2),
        prev * (1.0 - s1) * (1.0 - s2) + (1.0 - prev) * c1 * c2,
    ]
}

pub fn cell_probabilities(
    prev: f64,
    reference: Accuracy,
    index: Accuracy,
) -> Result<CellProbabilities> {
    check_probability("prevalence", prev)?;
    check_probability("reference sensitivity", reference.se)?;
    check_probability("reference specificity", reference.sp)?;
    check_probability("index sensitivity", index.se)?;
    check_probability("index specificity", index.sp)?;
    let [p11, p10, p01, p00] = cells_unchecked(prev, reference, index);
    Ok(CellProbabilities { p11, p10, p01, p00 })
}

/// Multinomial log likelihood of one table without its constant.
pub fn table_log_likelihood(
    table: &TwoByTwoTable,
    prev: f64,
    reference: Accuracy,
    index: Accuracy,
) -> f64 {
    let p = cells_unchecked(prev, reference, index);
    table
        .cells_by_reference()
        .iter()
        .zip(p)
        .map(|(&n, p)| xlogy(n as f64, p))
        .sum()
}

/// One table per study.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataset {
    study_ids: Vec<u64>,
    tables: Vec<TwoByTwoTable>,
}

impl MetaDataset {
    pub fn new(study_ids: Vec<u64>, tables: Vec<TwoByTwoTable>) -> Result<Self> {
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
        if let Some(i) = tables.iter().position(|t| t.n() == 0) {
            return Err(Error::InvalidDataset(format!(
                "study {} has an empty table",
                study_ids[i]
            )));
        }
        Ok(MetaDataset { study_ids, tables })
    }

    /// Numbers the studies from 1.
    pub fn from_tables(tables: Vec<TwoByTwoTable>) -> Result<Self> {
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

    pub fn tables(&self) -> &[TwoByTwoTable] {
        &self.tables
    }
}

impl StudyModel for MetaDataset {
    fn n_studies(&self) -> usize {
        self.tables.len()
    }

    fn study_id(&self, study: usize) -> u64 {
        self.study_ids[study]
    }

    fn study_log_lik(&self, study: usize, prev: f64, reference: Accuracy, index: Accuracy) -> f64 {
        table_log_likelihood(&self.tables[study], prev, reference, index)
    }

    fn naive_start(&self, study: usize) -> (f64, Accuracy) {
        let t = &self.tables[study];
        let prev = t.ref_positive() as f64 / t.n() as f64;
        let se = t.n_pp as f64 / t.ref_positive() as f64;
        let sp = t.n_nn as f64 / t.ref_negative() as f64;
        (prev, Accuracy::new(se, sp))
    }
}

/// Sum of the per-study multinomial log likelihoods, constants omitted.
pub fn log_likelihood(dataset: &MetaDataset, state: &ModelState) -> Result<f64> {
    state.check_dimensions(dataset.len())?;
    Ok(state.log_likelihood(dataset))
}

/// Log prior density of a state under [`LCBM_PRIOR`], up to a constant.
pub fn log_prior(state: &ModelState) -> f64 {
    LCBM_PRIOR.ln_density(state, false)
}

fn prior_for(config: &McmcConfig) -> HyperPrior {
    HyperPrior {
        rho_free: config.rho_free.unwrap_or(LCBM_PRIOR.rho_free),
        ..LCBM_PRIOR
    }
}

/// One chain of the bivariate model.
pub fn run_chain(
    dataset: &MetaDataset,
    config: &McmcConfig,
    chain_seed: u64,
) -> Result<Vec<ModelState>> {
    Ok(mcmc::run_chain(dataset, &prior_for(config), config, chain_seed)?.samples)
}

pub fn fit_lcbm(dataset: &MetaDataset, config: &McmcConfig) -> Result<FitResult> {
    mcmc::fit(dataset, &prior_for(config), config, "lcbm")
}

/// Splits stratum-labelled tables into one dataset per stratum. Empty tables
/// are dropped and strata left with fewer than two studies are skipped.
pub fn split_strata(
    study_ids: &[u64],
    tables: &[TwoByTwoTable],
) -> Result<BTreeMap<u8, MetaDataset>> {
    if study_ids.len() != tables.len() {
        return Err(Error::LengthMismatch {
            left: study_ids.len(),
            right: tables.len(),
        });
    }
    let mut groups: BTreeMap<u8, (Vec<u64>, Vec<TwoByTwoTable>)> = BTreeMap::new();
    for (&id, table) in study_ids.iter().zip(tables) {
        let Some(stratum) = table.stratum else {
            return Err(Error::NoStrata);
        };
        if table.n() == 0 {
            continue;
        }
        let entry = groups.entry(stratum).or_default();
        entry.0.push(id);
        entry.1.push(*table);
    }
    if groups.is_empty() {
        return Err(Error::NoStrata);
    }
    let mut out = BTreeMap::new();
    for (stratum, (ids, tables)) in groups {
        if tables.len() < 2 {
            log::warn!(
                "stratum R={stratum} has {} nonempty studies; skipped",
                tables.len()
            );
            continue;
        }
        out.insert(stratum, MetaDataset::new(ids, tables)?);
    }
    Ok(out)
}

/// Independent fits of the bivariate model within each covariate stratum.
pub fn fit_lcbm_subgroup(
    study_ids: &[u64],
    tables: &[TwoByTwoTable],
    config: &McmcConfig,
) -> Result<BTreeMap<u8, FitResult>> {
    split_strata(study_ids, tables)?
        .into_iter()
        .map(|(stratum, ds)| Ok((stratum, fit_lcbm(&ds, config)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn acc(v: f64) -> Accuracy {
        Accuracy::new(v, v)
    }

    #[test]
    fn symmetric_cells() {
        let c = cell_probabilities(0.5, acc(0.9), acc(0.9)).unwrap();
        assert_abs_diff_eq!(c.p11, 0.41, epsilon = 1e-12);
        assert_abs_diff_eq!(c.p10, 0.09, epsilon = 1e-12);
        assert_abs_diff_eq!(c.p01, 0.09, epsilon = 1e-12);
        assert_abs_diff_eq!(c.p00, 0.41, epsilon = 1e-12);
    }

    #[test]
    fn each_accuracy_pairs_with_its_own_test() {
        // reference positive, index negative
        let c = cell_probabilities(1.0, Accuracy::new(0.7, 0.95), Accuracy::new(0.9, 0.8)).unwrap();
        assert_abs_diff_eq!(c.p10, 0.7 * 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(c.p01, 0.3 * 0.9, epsilon = 1e-15);
        assert!(cell_probabilities(1.2, acc(0.9), acc(0.9)).is_err());
    }

    #[test]
    fn single_subject_likelihood() {
        let t = TwoByTwoTable::new(1, 0, 0, 0);
        assert_abs_diff_eq!(
            table_log_likelihood(&t, 0.5, acc(0.9), acc(0.9)),
            0.41f64.ln(),
            epsilon = 1e-12
        );
        let zero = TwoByTwoTable::default();
        assert_eq!(table_log_likelihood(&zero, 0.5, acc(0.9), acc(0.9)), 0.0);
        let t = TwoByTwoTable::new(3, 1, 2, 7);
        let d = TwoByTwoTable::new(6, 2, 4, 14);
        let (r, x) = (Accuracy::new(0.7, 0.95), Accuracy::new(0.85, 0.9));
        assert_abs_diff_eq!(
            table_log_likelihood(&d, 0.3, r, x),
            2.0 * table_log_likelihood(&t, 0.3, r, x),
            epsilon = 1e-12
        );
    }

    #[test]
    fn impossible_cell_is_negative_infinity() {
        // index positive but both tests perfect and reference negative
        let t = TwoByTwoTable::new(0, 1, 0, 0);
        assert_eq!(
            table_log_likelihood(&t, 0.5, Accuracy::PERFECT, Accuracy::PERFECT),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn dataset_checks() {
        let t = TwoByTwoTable::new(1, 2, 3, 4);
        assert!(MetaDataset::from_tables(vec![t]).is_err());
        assert!(MetaDataset::from_tables(vec![t, TwoByTwoTable::default()]).is_err());
        assert_eq!(MetaDataset::from_tables(vec![t, t]).unwrap().len(), 2);
    }

    #[test]
    fn strata_required() {
        let t = TwoByTwoTable::new(1, 2, 3, 4);
        assert!(matches!(
            split_strata(&[1, 2], &[t, t]),
            Err(Error::NoStrata)
        ));
        let tables = [t.with_stratum(0), t.with_stratum(1), t.with_stratum(0)];
        let split = split_strata(&[1, 1, 2], &tables).unwrap();
        // stratum 1 has a single study
        assert_eq!(split.keys().copied().collect::<Vec<_>>(), vec![0]);
        assert_eq!(split[&0].study_ids(), &[1, 2]);
    }

    #[test]
    fn prior_support() {
        let ds = MetaDataset::from_tables(vec![TwoByTwoTable::new(5, 1, 1, 5); 2]).unwrap();
        let mut state = ModelState {
            prev: vec![0.5, 0.4],
            logit_acc: [vec![[1.0, 2.0]; 2], vec![[2.0, 2.0]; 2]],
            mu: [[1.0, 2.0], [2.0, 2.0]],
            sigma: [[0.5, 0.5], [0.5, 0.5]],
            rho: [0.0, 0.3],
        };
        assert!(log_prior(&state).is_finite());
        assert!(log_likelihood(&ds, &state).unwrap().is_finite());
        state.sigma[1][0] = 0.0;
        assert_eq!(log_prior(&state), f64::NEG_INFINITY);
        state.prev.pop();
        assert!(log_likelihood(&ds, &state).is_err());
    }
}
