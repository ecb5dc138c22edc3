//! `fit.json`: one document per fit command, one block per fitted dataset.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mcmc::{adjusted_association, FitResult, McmcConfig, ParamSummary, StudyPosterior};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedRho {
    pub rho_se_prev: Option<f64>,
    pub rho_sp_prev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitBlock {
    pub setup: String,
    /// Covariate stratum of a subgroup fit.
    pub stratum: Option<u8>,
    pub converged: bool,
    pub summaries: BTreeMap<String, ParamSummary>,
    pub per_study: Vec<StudyPosterior>,
    pub acceptance: BTreeMap<String, f64>,
    pub adjusted_rho: AdjustedRho,
}

impl FitBlock {
    pub fn new(setup: &str, stratum: Option<u8>, fit: FitResult) -> Result<Self> {
        let (se, sp) = adjusted_association(&fit)?;
        Ok(FitBlock {
            setup: setup.to_string(),
            stratum,
            converged: fit.converged,
            summaries: fit.summaries,
            per_study: fit.per_study,
            acceptance: fit.acceptance,
            adjusted_rho: AdjustedRho {
                rho_se_prev: se,
                rho_sp_prev: sp,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub model: String,
    pub config: McmcConfig,
    pub fits: Vec<FitBlock>,
}

impl FitDocument {
    pub fn converged(&self) -> bool {
        self.fits.iter().all(|f| f.converged)
    }
}

pub fn write_fit_document<W: Write>(doc: &FitDocument, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, doc)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)?;
    Ok(())
}

pub fn read_fit_document<R: std::io::Read>(input: R) -> Result<FitDocument> {
    Ok(serde_json::from_reader(input)?)
}
