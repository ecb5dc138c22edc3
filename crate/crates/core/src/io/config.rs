//! TOML run configuration.
//!
//! ```toml
//! seed = 20240601
//! n_studies = 10000
//! n_subjects = 500
//!
//! [scenario]
//! bias = "partial_verification"
//! setups = [1, 4]
//!
//! [grid]
//! verification = { low = 0.1, high = 0.9 }
//!
//! [mcmc]
//! n_chains = 3
//!
//! [fit]
//! model = "pvb"
//! ```
//!
//! Every key is optional except `scenario.bias`; unknown keys are errors.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::McmcConfig;
use crate::sim::{
    make_scenario_grid, Accuracy, BiasStructure, Bounds, ScenarioSetup, StratifiedAccuracy,
};

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_STUDIES: usize = 10_000;
pub const DEFAULT_SUBJECTS: usize = 500;
pub const DEFAULT_FIT_STUDIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Lcbm,
    Pvb,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lcbm => "lcbm",
            ModelKind::Pvb => "pvb",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lcbm" => Ok(ModelKind::Lcbm),
            "pvb" => Ok(ModelKind::Pvb),
            other => Err(Error::InvalidConfig(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub bias: Option<String>,
    /// 1-based setup numbers; all setups when absent.
    pub setups: Option<Vec<usize>>,
}

/// Replacements for the default data-generating parameters.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    pub prevalence: Option<Bounds>,
    pub prevalence_r1: Option<Bounds>,
    pub prevalence_r0: Option<Bounds>,
    pub verification: Option<Bounds>,
    /// One setup per entry. Not available for conditional dependence.
    pub reference: Option<Vec<Accuracy>>,
    pub index: Option<Accuracy>,
    pub index_r1: Option<Accuracy>,
    pub index_r0: Option<Accuracy>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub model: Option<ModelKind>,
    pub subgroup: Option<bool>,
}

/// The configuration file as written.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub n_studies: Option<usize>,
    pub n_subjects: Option<usize>,
    /// Studies per meta-analysis in the fitting stage of a full pipeline.
    pub fit_studies: Option<usize>,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub grid: GridOverrides,
    pub mcmc: Option<McmcConfig>,
    #[serde(default)]
    pub fit: FitSection,
}

/// A configuration with defaults filled in and setups resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub bias: BiasStructure,
    pub setups: Vec<ScenarioSetup>,
    pub seed: u64,
    pub n_studies: usize,
    pub n_subjects: usize,
    pub fit_studies: usize,
    pub mcmc: McmcConfig,
    pub model: ModelKind,
    pub subgroup: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn resolve(&self) -> Result<RunPlan> {
        let name = self
            .scenario
            .bias
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("scenario.bias is required".into()))?;
        let bias: BiasStructure = name.parse()?;
        let grid = apply_overrides(bias, &self.grid)?;
        let setups = match &self.scenario.setups {
            None => grid,
            Some(numbers) => select_setups(&grid, numbers)?,
        };
        for s in &setups {
            s.validate()?;
        }
        let mcmc = self.mcmc.clone().unwrap_or_default();
        mcmc.validate()?;
        let plan = RunPlan {
            bias,
            setups,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            n_studies: self.n_studies.unwrap_or(DEFAULT_STUDIES),
            n_subjects: self.n_subjects.unwrap_or(DEFAULT_SUBJECTS),
            fit_studies: self.fit_studies.unwrap_or(DEFAULT_FIT_STUDIES),
            mcmc,
            model: self.fit.model.unwrap_or_default(),
            subgroup: self.fit.subgroup.unwrap_or(false),
        };
        if plan.n_studies == 0 || plan.n_subjects == 0 || plan.fit_studies == 0 {
            return Err(Error::InvalidConfig(
                "study and subject counts must be positive".into(),
            ));
        }
        Ok(plan)
    }
}

/// Reads and resolves a configuration file.
pub fn parse_config(path: &Path) -> Result<RunPlan> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config = RunConfig::from_toml(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.resolve()
}

pub fn select_setups(grid: &[ScenarioSetup], numbers: &[usize]) -> Result<Vec<ScenarioSetup>> {
    numbers
        .iter()
        .map(|&n| {
            grid.iter()
                .find(|s| s.number() == Some(n))
                .cloned()
                .ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "setup {n} does not exist; this grid has {} setups",
                        grid.len()
                    ))
                })
        })
        .collect()
}

fn apply_overrides(bias: BiasStructure, o: &GridOverrides) -> Result<Vec<ScenarioSetup>> {
    let unused = |key: &str| {
        Err(Error::InvalidConfig(format!(
            "grid.{key} does not apply to {bias}"
        )))
    };
    let mut grid = make_scenario_grid(bias);

    if let Some(refs) = &o.reference {
        if bias == BiasStructure::ConditionalDependence {
            return unused("reference");
        }
        if refs.is_empty() {
            return Err(Error::InvalidConfig("grid.reference is empty".into()));
        }
        let template = grid[0].clone();
        grid = refs
            .iter()
            .enumerate()
            .map(|(i, &acc)| {
                acc.validate("grid.reference")?;
                let mut s = template.clone();
                s.label = format!("Setup {}", i + 1);
                s.reference = if template.reference.is_stratified() {
                    StratifiedAccuracy::ByCovariate {
                        r_pos: acc,
                        r_neg: acc,
                    }
                } else {
                    StratifiedAccuracy::Common(acc)
                };
                Ok(s)
            })
            .collect::<Result<_>>()?;
    }

    let stratified = grid[0].index.is_stratified();
    if o.index.is_some() && stratified {
        return unused("index");
    }
    if (o.index_r1.is_some() || o.index_r0.is_some()) && !stratified {
        return unused(if o.index_r1.is_some() {
            "index_r1"
        } else {
            "index_r0"
        });
    }
    let confounded = bias == BiasStructure::Confounding;
    if (o.prevalence_r1.is_some() || o.prevalence_r0.is_some()) && !confounded {
        return unused("prevalence_r1");
    }
    if o.verification.is_some() && !bias.uses_verification() {
        return unused("verification");
    }

    for s in &mut grid {
        if let Some(b) = o.prevalence {
            s.prevalence = b;
        }
        if let Some(b) = o.verification {
            s.verification = Some(b);
        }
        if let Some(acc) = o.index {
            s.index = StratifiedAccuracy::Common(acc);
        }
        if let StratifiedAccuracy::ByCovariate { r_pos, r_neg } = &mut s.index {
            *r_pos = o.index_r1.unwrap_or(*r_pos);
            *r_neg = o.index_r0.unwrap_or(*r_neg);
        }
        if let Some(cp) = &mut s.confounded_prevalence {
            cp.r_pos = o.prevalence_r1.unwrap_or(cp.r_pos);
            cp.r_neg = o.prevalence_r0.unwrap_or(cp.r_neg);
            if o.prevalence.is_none() {
                s.prevalence = Bounds::new(
                    cp.r_pos.low.min(cp.r_neg.low),
                    cp.r_pos.high.max(cp.r_neg.high),
                );
            }
        }
    }
    Ok(grid)
}
