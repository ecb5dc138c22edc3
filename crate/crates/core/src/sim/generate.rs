//! Subject-level data generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{BiasStructure, ScenarioSetup};
use crate::error::{Error, Result};

/// Random stream used for one study.
///
/// Study `i` of a run seeded with `master_seed` reads ChaCha8 stream `i` of
/// the key expanded from `master_seed`, so each study sees the same numbers
/// however the studies are scheduled.
pub fn study_rng(master_seed: u64, study_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(study_index);
    rng
}

/// Study-level parameters drawn once per study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyParams {
    /// Study prevalence. Under confounding this is the marginal
    /// `p·π₁ + (1 − p)·π₀`; subjects draw their condition from the stratum prevalences.
    pub prevalence: f64,
    pub prevalence_r1: Option<f64>,
    pub prevalence_r0: Option<f64>,
    pub covariate_rate: Option<f64>,
    pub verif_rate: Option<f64>,
}

impl StudyParams {
    fn prevalence_for(&self, r: Option<bool>) -> f64 {
        match (r, self.prevalence_r1, self.prevalence_r0) {
            (Some(true), Some(p1), _) => p1,
            (Some(false), _, Some(p0)) => p0,
            _ => self.prevalence,
        }
    }
}

/// One simulated subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub d: bool,
    pub r: Option<bool>,
    /// Reference result, absent for unverified subjects.
    pub t_ref: Option<bool>,
    pub t_index: bool,
    pub verified: bool,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, low: f64, high: f64) -> f64 {
    low + (high - low) * rng.random::<f64>()
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

pub fn draw_study_params<R: Rng + ?Sized>(setup: &ScenarioSetup, rng: &mut R) -> StudyParams {
    let mut params = StudyParams {
        prevalence: 0.0,
        prevalence_r1: None,
        prevalence_r0: None,
        covariate_rate: None,
        verif_rate: None,
    };
    if setup.structure.uses_covariate() {
        // Beta(1, 1)
        params.covariate_rate = Some(rng.random::<f64>());
    }
    match setup.confounded_prevalence {
        Some(cp) => {
            let p1 = uniform(rng, cp.r_pos.low, cp.r_pos.high);
            let p0 = uniform(rng, cp.r_neg.low, cp.r_neg.high);
            let rate = params.covariate_rate.unwrap_or(0.5);
            params.prevalence_r1 = Some(p1);
            params.prevalence_r0 = Some(p0);
            params.prevalence = rate * p1 + (1.0 - rate) * p0;
        }
        None => {
            params.prevalence = uniform(rng, setup.prevalence.low, setup.prevalence.high);
        }
    }
    if let Some(v) = setup.verification {
        params.verif_rate = Some(uniform(rng, v.low, v.high));
    }
    params
}

/// Draws R, D, the reference result, the index result and verification, in that order.
pub fn simulate_subject<R: Rng + ?Sized>(
    params: &StudyParams,
    setup: &ScenarioSetup,
    rng: &mut R,
) -> SubjectRecord {
    let r = params.covariate_rate.map(|p| bernoulli(rng, p));
    let d = bernoulli(rng, params.prevalence_for(r));
    let t_ref = bernoulli(rng, setup.reference.for_stratum(r).positive_rate(d));
    let t_index = bernoulli(rng, setup.index.for_stratum(r).positive_rate(d));
    let verified = match (setup.structure, params.verif_rate) {
        (BiasStructure::PartialVerification, Some(pv)) => t_index || bernoulli(rng, pv),
        _ => true,
    };
    SubjectRecord {
        d,
        r,
        t_ref: verified.then_some(t_ref),
        t_index,
        verified,
    }
}

pub fn simulate_study<R: Rng + ?Sized>(
    setup: &ScenarioSetup,
    n_subjects: usize,
    rng: &mut R,
) -> Result<(StudyParams, Vec<SubjectRecord>)> {
    if n_subjects == 0 {
        return Err(Error::InvalidScenario(
            "a study needs at least one subject".into(),
        ));
    }
    let params = draw_study_params(setup, rng);
    let subjects = (0..n_subjects)
        .map(|_| simulate_subject(&params, setup, rng))
        .collect();
    Ok((params, subjects))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::make_scenario_grid;

    fn setup(structure: BiasStructure, i: usize) -> ScenarioSetup {
        make_scenario_grid(structure).remove(i)
    }

    #[test]
    fn prevalence_within_bounds() {
        let s = setup(BiasStructure::ReferenceStandardError, 0);
        let mut rng = study_rng(7, 0);
        for _ in 0..1000 {
            let p = draw_study_params(&s, &mut rng);
            assert!((0.1..=0.9).contains(&p.prevalence));
            assert!(p.covariate_rate.is_none() && p.verif_rate.is_none());
        }
    }

    #[test]
    fn params_are_deterministic() {
        let s = setup(BiasStructure::PartialVerification, 1);
        let a = draw_study_params(&s, &mut study_rng(11, 3));
        let b = draw_study_params(&s, &mut study_rng(11, 3));
        assert_eq!(a, b);
        let c = draw_study_params(&s, &mut study_rng(11, 4));
        assert_ne!(a, c);
    }

    #[test]
    fn confounded_prevalences() {
        let s = setup(BiasStructure::Confounding, 0);
        let mut rng = study_rng(1, 1);
        for _ in 0..1000 {
            let p = draw_study_params(&s, &mut rng);
            assert!((0.7..=0.9).contains(&p.prevalence_r1.unwrap()));
            assert!((0.1..=0.3).contains(&p.prevalence_r0.unwrap()));
            assert!((0.0..=1.0).contains(&p.covariate_rate.unwrap()));
            assert!(s.prevalence.contains(p.prevalence));
        }
    }

    #[test]
    fn perfect_reference_agrees_with_condition() {
        let s = setup(BiasStructure::ReferenceStandardError, 3);
        let (_, subjects) = simulate_study(&s, 2000, &mut study_rng(2, 0)).unwrap();
        for subj in subjects {
            assert_eq!(subj.t_ref, Some(subj.d));
            assert!(subj.verified && subj.r.is_none());
        }
    }

    #[test]
    fn spectrum_index_sensitivity_in_r_positive() {
        let s = setup(BiasStructure::SpectrumEffect, 0);
        let params = StudyParams {
            prevalence: 0.5,
            prevalence_r1: None,
            prevalence_r0: None,
            covariate_rate: Some(1.0),
            verif_rate: None,
        };
        let mut rng = study_rng(5, 0);
        let (mut pos, mut diseased) = (0usize, 0usize);
        for _ in 0..200_000 {
            let subj = simulate_subject(&params, &s, &mut rng);
            assert_eq!(subj.r, Some(true));
            if subj.d {
                diseased += 1;
                pos += usize::from(subj.t_index);
            }
        }
        let rate = pos as f64 / diseased as f64;
        // 0.8 with a binomial standard error of about 0.0013
        assert!((rate - 0.8).abs() < 0.006, "{rate}");
    }

    #[test]
    fn verification_depends_on_index_result() {
        let s = setup(BiasStructure::PartialVerification, 0);
        let params = StudyParams {
            prevalence: 0.5,
            prevalence_r1: None,
            prevalence_r0: None,
            covariate_rate: None,
            verif_rate: Some(0.6),
        };
        let mut rng = study_rng(9, 0);
        let (mut neg, mut neg_verified) = (0usize, 0usize);
        for _ in 0..200_000 {
            let subj = simulate_subject(&params, &s, &mut rng);
            assert_eq!(subj.t_ref.is_some(), subj.verified);
            if subj.t_index {
                assert!(subj.verified);
            } else {
                neg += 1;
                neg_verified += usize::from(subj.verified);
            }
        }
        let rate = neg_verified as f64 / neg as f64;
        assert!((rate - 0.6).abs() < 0.008, "{rate}");
    }

    #[test]
    fn study_size_and_verification() {
        let s = setup(BiasStructure::ConditionalDependence, 0);
        let (_, subjects) = simulate_study(&s, 500, &mut study_rng(3, 0)).unwrap();
        assert_eq!(subjects.len(), 500);
        assert!(subjects.iter().all(|x| x.verified && x.r.is_some()));
        assert!(simulate_study(&s, 0, &mut study_rng(3, 0)).is_err());
    }

    #[test]
    fn study_is_reproducible() {
        let s = setup(BiasStructure::Confounding, 1);
        let a = simulate_study(&s, 500, &mut study_rng(42, 17)).unwrap();
        let b = simulate_study(&s, 500, &mut study_rng(42, 17)).unwrap();
        assert_eq!(a, b);
    }
}
