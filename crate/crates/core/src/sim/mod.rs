//! Simulation of diagnostic accuracy studies under each bias structure.

mod generate;
mod scenario;
mod tables;

pub use generate::{
    draw_study_params, simulate_study, simulate_subject, study_rng, StudyParams, SubjectRecord,
};
pub use scenario::{
    make_scenario_grid, Accuracy, BiasStructure, Bounds, CovariatePrevalence, ScenarioSetup,
    StratifiedAccuracy, DEPENDENCE_GRID, INDEX_ACCURACY, INDEX_R_NEG, INDEX_R_POS,
    PREVALENCE_RANGE, PREVALENCE_R_NEG, PREVALENCE_R_POS, REFERENCE_GRID, VERIFICATION_RANGE,
};
pub use tables::{
    naive_estimates, tabulate, EstimateRecord, StudyTables, TwoByTwoTable, VerificationTable,
};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Everything produced by one simulated meta-analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub setup: ScenarioSetup,
    pub estimates: Vec<EstimateRecord>,
    pub tables: Vec<StudyTables>,
}

/// Simulates `n_studies` studies of one setup. Study ids run from 1 and
/// study `i` draws from [`study_rng`]`(master_seed, i)`.
pub fn run_scenario(
    setup: &ScenarioSetup,
    n_studies: usize,
    n_subjects: usize,
    master_seed: u64,
) -> Result<ScenarioOutput> {
    setup.validate()?;
    if n_studies == 0 {
        return Err(Error::InvalidScenario(
            "a meta-analysis needs at least one study".into(),
        ));
    }
    if n_subjects == 0 {
        return Err(Error::InvalidScenario(
            "a study needs at least one subject".into(),
        ));
    }

    let studies: Vec<(EstimateRecord, StudyTables)> = (1..=n_studies as u64)
        .into_par_iter()
        .map(|study_id| {
            let mut rng = study_rng(master_seed, study_id);
            let (_, subjects) = simulate_study(setup, n_subjects, &mut rng)?;
            let tables = tabulate(&subjects);
            let estimate = naive_estimates(&tables.pooled, study_id, &setup.label);
            Ok((estimate, tables))
        })
        .collect::<Result<_>>()?;

    let (estimates, tables) = studies.into_iter().unzip();
    Ok(ScenarioOutput {
        setup: setup.clone(),
        estimates,
        tables,
    })
}
