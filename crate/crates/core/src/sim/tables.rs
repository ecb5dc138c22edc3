//! Study-level tables and the naive estimates computed from them.

use serde::{Deserialize, Serialize};

use super::generate::SubjectRecord;

/// Cross-classification of verified subjects. The first letter of each cell
/// is the index result, the second the reference result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TwoByTwoTable {
    pub n_pp: u64,
    pub n_pn: u64,
    pub n_np: u64,
    pub n_nn: u64,
    /// Covariate stratum (0 or 1) when the table covers a single stratum.
    pub stratum: Option<u8>,
}

impl TwoByTwoTable {
    pub fn new(n_pp: u64, n_pn: u64, n_np: u64, n_nn: u64) -> Self {
        TwoByTwoTable {
            n_pp,
            n_pn,
            n_np,
            n_nn,
            stratum: None,
        }
    }

    pub fn with_stratum(mut self, stratum: u8) -> Self {
        self.stratum = Some(stratum);
        self
    }

    pub fn n(&self) -> u64 {
        self.n_pp + self.n_pn + self.n_np + self.n_nn
    }

    pub fn ref_positive(&self) -> u64 {
        self.n_pp + self.n_np
    }

    pub fn ref_negative(&self) -> u64 {
        self.n_pn + self.n_nn
    }

    /// Cells in `(ref+ index+, ref+ index−, ref− index+, ref− index−)` order,
    /// matching [`crate::lcbm::CellProbabilities`].
    pub fn cells_by_reference(&self) -> [u64; 4] {
        [self.n_pp, self.n_np, self.n_pn, self.n_nn]
    }

    fn add(&mut self, t_index: bool, t_ref: bool) {
        match (t_index, t_ref) {
            (true, true) => self.n_pp += 1,
            (true, false) => self.n_pn += 1,
            (false, true) => self.n_np += 1,
            (false, false) => self.n_nn += 1,
        }
    }
}

/// Two-stage verification counts of one study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VerificationTable {
    pub n_total: u64,
    /// Index-positive subjects.
    pub n1: u64,
    pub v1: u64,
    pub v0: u64,
    /// Reference-positive among verified index-positives.
    pub x1: u64,
    /// Reference-positive among verified index-negatives.
    pub x0: u64,
}

impl VerificationTable {
    pub fn is_consistent(&self) -> bool {
        self.n1 <= self.n_total
            && self.v1 <= self.n1
            && self.v0 <= self.n_total - self.n1
            && self.x1 <= self.v1
            && self.x0 <= self.v0
    }

    /// The complete-case two-by-two table of the verified subjects.
    pub fn verified_table(&self) -> TwoByTwoTable {
        TwoByTwoTable::new(self.x1, self.v1 - self.x1, self.x0, self.v0 - self.x0)
    }

    /// The verification table of a fully verified study.
    pub fn fully_verified(table: &TwoByTwoTable) -> Self {
        let n1 = table.n_pp + table.n_pn;
        VerificationTable {
            n_total: table.n(),
            n1,
            v1: n1,
            v0: table.n_np + table.n_nn,
            x1: table.n_pp,
            x0: table.n_np,
        }
    }
}

/// Every table derived from one study.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyTables {
    pub pooled: TwoByTwoTable,
    /// `[R = 0, R = 1]` tables when subjects carry the covariate.
    pub strata: Option<[TwoByTwoTable; 2]>,
    pub verification: VerificationTable,
}

pub fn tabulate(subjects: &[SubjectRecord]) -> StudyTables {
    let mut pooled = TwoByTwoTable::default();
    let mut strata = [
        TwoByTwoTable::default().with_stratum(0),
        TwoByTwoTable::default().with_stratum(1),
    ];
    let mut has_r = false;
    let mut verification = VerificationTable::default();

    for s in subjects {
        verification.n_total += 1;
        if s.t_index {
            verification.n1 += 1;
        }
        let Some(t_ref) = s.t_ref.filter(|_| s.verified) else {
            continue;
        };
        if s.t_index {
            verification.v1 += 1;
            verification.x1 += u64::from(t_ref);
        } else {
            verification.v0 += 1;
            verification.x0 += u64::from(t_ref);
        }
        pooled.add(s.t_index, t_ref);
        if let Some(r) = s.r {
            has_r = true;
            strata[usize::from(r)].add(s.t_index, t_ref);
        }
    }

    StudyTables {
        pooled,
        strata: has_r.then_some(strata),
        verification,
    }
}

/// Per-study naive estimates that treat the reference as error-free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub study_id: u64,
    pub setup_label: String,
    pub prev_hat: Option<f64>,
    pub se_hat: Option<f64>,
    pub sp_hat: Option<f64>,
    pub n_ref_pos: u64,
    pub n_ref_neg: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn naive_estimates(table: &TwoByTwoTable, study_id: u64, setup_label: &str) -> EstimateRecord {
    EstimateRecord {
        study_id,
        setup_label: setup_label.to_string(),
        prev_hat: ratio(table.ref_positive(), table.n()),
        se_hat: ratio(table.n_pp, table.ref_positive()),
        sp_hat: ratio(table.n_nn, table.ref_negative()),
        n_ref_pos: table.ref_positive(),
        n_ref_neg: table.ref_negative(),
    }
}
