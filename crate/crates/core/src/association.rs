//! Cross-study association between naive accuracy and prevalence estimates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::sim::{Accuracy, EstimateRecord};

/// Ranks starting at 1; tied values share the average of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation, or `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation with pairwise deletion of missing values.
///
/// Returns `Ok(None)` with fewer than two complete pairs or when either rank
/// vector is constant.
pub fn spearman_rho(x: &[Option<f64>], y: &[Option<f64>]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    Ok(spearman_complete(&xs, &ys))
}

fn spearman_complete(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub setup_label: String,
    pub rho_se_prev: Option<f64>,
    pub rho_sp_prev: Option<f64>,
    pub n_pairs_se: usize,
    pub n_pairs_sp: usize,
}

fn complete_pairs(x: &[Option<f64>], y: &[Option<f64>]) -> usize {
    x.iter()
        .zip(y)
        .filter(|(a, b)| a.is_some() && b.is_some())
        .count()
}

/// One report per setup label, in order of first appearance.
pub fn correlation_report(records: &[EstimateRecord]) -> Vec<CorrelationReport> {
    let mut labels: Vec<&str> = Vec::new();
    for r in records {
        if !labels.contains(&r.setup_label.as_str()) {
            labels.push(&r.setup_label);
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let group: Vec<&EstimateRecord> =
                records.iter().filter(|r| r.setup_label == label).collect();
            let prev: Vec<_> = group.iter().map(|r| r.prev_hat).collect();
            let se: Vec<_> = group.iter().map(|r| r.se_hat).collect();
            let sp: Vec<_> = group.iter().map(|r| r.sp_hat).collect();
            CorrelationReport {
                setup_label: label.to_string(),
                rho_se_prev: spearman_rho(&se, &prev).expect("equal lengths"),
                rho_sp_prev: spearman_rho(&sp, &prev).expect("equal lengths"),
                n_pairs_se: complete_pairs(&se, &prev),
                n_pairs_sp: complete_pairs(&sp, &prev),
            }
        })
        .collect()
}

/// Expected naive sensitivity P(T₂ = 1 | T₁ = 1) and specificity
/// P(T₂ = 0 | T₁ = 0) when the tests are conditionally independent.
pub fn analytic_naive_accuracy(
    prev: f64,
    reference: Accuracy,
    index: Accuracy,
) -> Result<(f64, f64)> {
    check_probability("prev", prev)?;
    for (name, v) in [
        ("reference.se", reference.se),
        ("reference.sp", reference.sp),
        ("index.se", index.se),
        ("index.sp", index.sp),
    ] {
        check_probability(name, v)?;
    }
    let (s1, c1, s2, c2) = (reference.se, reference.sp, index.se, index.sp);
    let ref_pos = prev * s1 + (1.0 - prev) * (1.0 - c1);
    let ref_neg = prev * (1.0 - s1) + (1.0 - prev) * c1;
    if ref_pos <= 0.0 || ref_neg <= 0.0 {
        return Err(Error::DegenerateInput(format!(
            "reference positive rate {ref_pos} leaves a zero denominator \
             (prev {prev}, reference {s1}/{c1})"
        )));
    }
    let se = (prev * s1 * s2 + (1.0 - prev) * (1.0 - c1) * (1.0 - c2)) / ref_pos;
    let sp = (prev * (1.0 - s1) * (1.0 - s2) + (1.0 - prev) * c1 * c2) / ref_neg;
    Ok((se, sp))
}

/// Writes the per-study scatter table (the estimates CSV schema).
pub fn scatter_export<W: Write>(records: &[EstimateRecord], out: W) -> Result<()> {
    crate::io::write_estimates(records, out)
}
