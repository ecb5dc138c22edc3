//! Bias structures and the scenario grids used to simulate them.
//!
//! Test 1 is always the reference standard and test 2 the index test. Every
//! setup of a grid keeps the index test fixed and varies the reference.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// The five bias structures a scenario can simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasStructure {
    ReferenceStandardError,
    SpectrumEffect,
    Confounding,
    PartialVerification,
    ConditionalDependence,
}

impl BiasStructure {
    pub const ALL: [BiasStructure; 5] = [
        BiasStructure::ReferenceStandardError,
        BiasStructure::SpectrumEffect,
        BiasStructure::Confounding,
        BiasStructure::PartialVerification,
        BiasStructure::ConditionalDependence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BiasStructure::ReferenceStandardError => "reference_standard_error",
            BiasStructure::SpectrumEffect => "spectrum_effect",
            BiasStructure::Confounding => "confounding",
            BiasStructure::PartialVerification => "partial_verification",
            BiasStructure::ConditionalDependence => "conditional_dependence",
        }
    }

    /// Whether subjects carry the binary covariate R.
    pub fn uses_covariate(self) -> bool {
        matches!(
            self,
            BiasStructure::SpectrumEffect
                | BiasStructure::Confounding
                | BiasStructure::ConditionalDependence
        )
    }

    pub fn uses_verification(self) -> bool {
        self == BiasStructure::PartialVerification
    }
}

impl fmt::Display for BiasStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BiasStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let structure = match key.as_str() {
            "reference_standard_error" | "rseb" => BiasStructure::ReferenceStandardError,
            "spectrum_effect" | "spectrum" => BiasStructure::SpectrumEffect,
            "confounding" => BiasStructure::Confounding,
            "partial_verification" | "pvb" => BiasStructure::PartialVerification,
            "conditional_dependence" | "cd" => BiasStructure::ConditionalDependence,
            _ => return Err(Error::UnknownBias(s.to_string())),
        };
        Ok(structure)
    }
}

/// Sensitivity and specificity of one test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Accuracy {
    pub se: f64,
    pub sp: f64,
}

impl Accuracy {
    pub const PERFECT: Accuracy = Accuracy { se: 1.0, sp: 1.0 };

    pub const fn new(se: f64, sp: f64) -> Self {
        Accuracy { se, sp }
    }

    pub fn diagnostic_value(self) -> f64 {
        self.se + self.sp
    }

    /// P(test positive | condition status).
    pub fn positive_rate(self, diseased: bool) -> f64 {
        if diseased {
            self.se
        } else {
            1.0 - self.sp
        }
    }

    pub fn is_perfect(self) -> bool {
        self.se == 1.0 && self.sp == 1.0
    }

    pub fn validate(self, name: &str) -> Result<()> {
        check_probability(&format!("{name}.se"), self.se)?;
        check_probability(&format!("{name}.sp"), self.sp)
    }
}

/// Test accuracy that may depend on the covariate R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratifiedAccuracy {
    Common(Accuracy),
    ByCovariate { r_pos: Accuracy, r_neg: Accuracy },
}

impl StratifiedAccuracy {
    /// Accuracy for a subject with covariate value `r` (`None` when R is unused).
    pub fn for_stratum(&self, r: Option<bool>) -> Accuracy {
        match (self, r) {
            (StratifiedAccuracy::Common(acc), _) => *acc,
            (StratifiedAccuracy::ByCovariate { r_pos, .. }, Some(true)) => *r_pos,
            (StratifiedAccuracy::ByCovariate { r_neg, .. }, _) => *r_neg,
        }
    }

    pub fn strata(&self) -> Vec<Accuracy> {
        match self {
            StratifiedAccuracy::Common(acc) => vec![*acc],
            StratifiedAccuracy::ByCovariate { r_pos, r_neg } => vec![*r_pos, *r_neg],
        }
    }

    pub fn is_stratified(&self) -> bool {
        matches!(self, StratifiedAccuracy::ByCovariate { .. })
    }

    pub fn is_perfect(&self) -> bool {
        self.strata().iter().all(|a| a.is_perfect())
    }
}

/// Closed interval `[low, high]` for a uniformly drawn study-level rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub low: f64,
    pub high: f64,
}

impl Bounds {
    pub const fn new(low: f64, high: f64) -> Self {
        Bounds { low, high }
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.low..=self.high).contains(&value)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        check_probability(&format!("{name}.low"), self.low)?;
        check_probability(&format!("{name}.high"), self.high)?;
        if self.low > self.high {
            return Err(Error::InvalidBounds {
                name: name.to_string(),
                low: self.low,
                high: self.high,
            });
        }
        Ok(())
    }
}

/// Prevalence bounds within each covariate stratum (confounding only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariatePrevalence {
    pub r_pos: Bounds,
    pub r_neg: Bounds,
}

/// One fully resolved parameterization of one bias structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSetup {
    pub structure: BiasStructure,
    pub label: String,
    pub reference: StratifiedAccuracy,
    pub index: StratifiedAccuracy,
    /// Bounds of the study prevalence. Under confounding this is the envelope
    /// of the two stratum bounds.
    pub prevalence: Bounds,
    pub confounded_prevalence: Option<CovariatePrevalence>,
    /// Bounds of the verification rate among index-negatives.
    pub verification: Option<Bounds>,
}

impl ScenarioSetup {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(format!("{}: {msg}", self.label)));

        for acc in self.reference.strata() {
            acc.validate("reference")?;
        }
        for acc in self.index.strata() {
            acc.validate("index")?;
            if acc.diagnostic_value() <= 1.0 {
                return bad(format!(
                    "index diagnostic value {} must exceed 1",
                    acc.diagnostic_value()
                ));
            }
        }
        self.prevalence.validate("prevalence")?;

        let uses_r = self.structure.uses_covariate();
        if self.reference.is_stratified() != uses_r || self.index.is_stratified() != uses_r {
            return bad(format!(
                "stratified accuracies must be given iff {} uses a covariate",
                self.structure
            ));
        }
        let confounded = self.structure == BiasStructure::Confounding;
        match (&self.confounded_prevalence, confounded) {
            (Some(cp), true) => {
                cp.r_pos.validate("prevalence_r1")?;
                cp.r_neg.validate("prevalence_r0")?;
                let lo = cp.r_pos.low.min(cp.r_neg.low);
                let hi = cp.r_pos.high.max(cp.r_neg.high);
                if !(self.prevalence.contains(lo) && self.prevalence.contains(hi)) {
                    return bad("prevalence envelope must cover both strata".into());
                }
            }
            (None, false) => {}
            (None, true) => return bad("confounding requires stratum prevalence bounds".into()),
            (Some(_), false) => {
                return bad("stratum prevalence bounds are only used by confounding".into())
            }
        }
        match (&self.verification, self.structure.uses_verification()) {
            (Some(v), true) => v.validate("verification")?,
            (None, false) => {}
            (None, true) => return bad("partial verification requires verification bounds".into()),
            (Some(_), false) => {
                return bad("verification bounds are only used by partial verification".into())
            }
        }
        Ok(())
    }

    /// The setup number parsed from a "Setup N" label.
    pub fn number(&self) -> Option<usize> {
        self.label.strip_prefix("Setup ")?.trim().parse().ok()
    }
}

pub const INDEX_ACCURACY: Accuracy = Accuracy::new(0.9, 0.9);
pub const INDEX_R_POS: Accuracy = Accuracy::new(0.8, 0.8);
pub const INDEX_R_NEG: Accuracy = Accuracy::new(0.9, 0.9);
pub const PREVALENCE_RANGE: Bounds = Bounds::new(0.1, 0.9);
pub const PREVALENCE_R_POS: Bounds = Bounds::new(0.7, 0.9);
pub const PREVALENCE_R_NEG: Bounds = Bounds::new(0.1, 0.3);
pub const VERIFICATION_RANGE: Bounds = Bounds::new(0.5, 0.9);

/// Reference accuracies of the four-setup grids (three imperfect, one perfect).
pub const REFERENCE_GRID: [Accuracy; 4] = [
    Accuracy::new(0.7, 0.95),
    Accuracy::new(0.8, 0.95),
    Accuracy::new(0.9, 0.95),
    Accuracy::PERFECT,
];

/// Reference accuracies (R+, R−) of the conditional dependence grid.
pub const DEPENDENCE_GRID: [(Accuracy, Accuracy); 3] = [
    (Accuracy::new(0.6, 0.85), Accuracy::new(0.7, 0.95)),
    (Accuracy::new(0.7, 0.85), Accuracy::new(0.8, 0.95)),
    (Accuracy::new(0.8, 0.85), Accuracy::new(0.9, 0.95)),
];

fn label(i: usize) -> String {
    format!("Setup {}", i + 1)
}

/// All setups of one bias structure, in figure order.
pub fn make_scenario_grid(structure: BiasStructure) -> Vec<ScenarioSetup> {
    let common = |reference: Accuracy| StratifiedAccuracy::Common(reference);
    let equal_strata = |reference: Accuracy| StratifiedAccuracy::ByCovariate {
        r_pos: reference,
        r_neg: reference,
    };
    let stratified_index = StratifiedAccuracy::ByCovariate {
        r_pos: INDEX_R_POS,
        r_neg: INDEX_R_NEG,
    };

    match structure {
        BiasStructure::ConditionalDependence => DEPENDENCE_GRID
            .iter()
            .enumerate()
            .map(|(i, &(r_pos, r_neg))| ScenarioSetup {
                structure,
                label: label(i),
                reference: StratifiedAccuracy::ByCovariate { r_pos, r_neg },
                index: stratified_index,
                prevalence: PREVALENCE_RANGE,
                confounded_prevalence: None,
                verification: None,
            })
            .collect(),
        _ => REFERENCE_GRID
            .iter()
            .enumerate()
            .map(|(i, &reference)| {
                let mut setup = ScenarioSetup {
                    structure,
                    label: label(i),
                    reference: common(reference),
                    index: StratifiedAccuracy::Common(INDEX_ACCURACY),
                    prevalence: PREVALENCE_RANGE,
                    confounded_prevalence: None,
                    verification: None,
                };
                match structure {
                    BiasStructure::SpectrumEffect => {
                        setup.reference = equal_strata(reference);
                        setup.index = stratified_index;
                    }
                    BiasStructure::Confounding => {
                        setup.reference = equal_strata(reference);
                        setup.index = stratified_index;
                        setup.confounded_prevalence = Some(CovariatePrevalence {
                            r_pos: PREVALENCE_R_POS,
                            r_neg: PREVALENCE_R_NEG,
                        });
                    }
                    BiasStructure::PartialVerification => {
                        setup.verification = Some(VERIFICATION_RANGE);
                    }
                    _ => {}
                }
                setup
            })
            .collect(),
    }
}
