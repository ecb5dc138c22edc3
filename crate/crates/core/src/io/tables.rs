//! CSV interchange formats.
//!
//! Missing values are empty fields and probabilities are written with six
//! decimals (round half to even on the exact binary value).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::association::CorrelationReport;
use crate::error::{Error, Result};
use crate::sim::{EstimateRecord, ScenarioOutput, TwoByTwoTable, VerificationTable};

pub const ESTIMATES_HEADER: [&str; 7] = [
    "study_id",
    "setup",
    "prev_hat",
    "se_hat",
    "sp_hat",
    "n_ref_pos",
    "n_ref_neg",
];
pub const META_HEADER: [&str; 7] = [
    "study_id", "setup", "stratum", "n_pp", "n_pn", "n_np", "n_nn",
];
pub const VERIF_HEADER: [&str; 8] = ["study_id", "setup", "n_total", "n1", "v1", "v0", "x1", "x0"];
pub const CORRELATIONS_HEADER: [&str; 5] = [
    "setup",
    "rho_se_prev",
    "n_pairs_se",
    "rho_sp_prev",
    "n_pairs_sp",
];

/// One row of `meta.csv`: a study table, pooled or for one stratum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaRow {
    pub study_id: u64,
    pub setup: String,
    pub table: TwoByTwoTable,
}

/// One row of `verif.csv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifRow {
    pub study_id: u64,
    pub setup: String,
    pub table: VerificationTable,
}

/// Pooled table of every study, each followed by its stratum tables if any.
pub fn meta_rows(output: &ScenarioOutput) -> Vec<MetaRow> {
    let mut rows = Vec::new();
    for (e, t) in output.estimates.iter().zip(&output.tables) {
        let row = |table: TwoByTwoTable| MetaRow {
            study_id: e.study_id,
            setup: output.setup.label.clone(),
            table,
        };
        rows.push(row(t.pooled));
        if let Some(strata) = t.strata {
            rows.extend(strata.map(row));
        }
    }
    rows
}

pub fn verif_rows(output: &ScenarioOutput) -> Vec<VerifRow> {
    output
        .estimates
        .iter()
        .zip(&output.tables)
        .map(|(e, t)| VerifRow {
            study_id: e.study_id,
            setup: output.setup.label.clone(),
            table: t.verification,
        })
        .collect()
}

pub fn format_prob(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_estimates<W: Write>(records: &[EstimateRecord], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(ESTIMATES_HEADER)?;
    for r in records {
        w.write_record([
            r.study_id.to_string(),
            r.setup_label.clone(),
            format_prob(r.prev_hat),
            format_prob(r.se_hat),
            format_prob(r.sp_hat),
            r.n_ref_pos.to_string(),
            r.n_ref_neg.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_meta<W: Write>(rows: &[MetaRow], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(META_HEADER)?;
    for r in rows {
        let t = &r.table;
        w.write_record([
            r.study_id.to_string(),
            r.setup.clone(),
            t.stratum.map(|s| s.to_string()).unwrap_or_default(),
            t.n_pp.to_string(),
            t.n_pn.to_string(),
            t.n_np.to_string(),
            t.n_nn.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_verif<W: Write>(rows: &[VerifRow], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(VERIF_HEADER)?;
    for r in rows {
        let t = &r.table;
        w.write_record([
            r.study_id.to_string(),
            r.setup.clone(),
            t.n_total.to_string(),
            t.n1.to_string(),
            t.v1.to_string(),
            t.v0.to_string(),
            t.x1.to_string(),
            t.x0.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_correlations<W: Write>(reports: &[CorrelationReport], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(CORRELATIONS_HEADER)?;
    for r in reports {
        w.write_record([
            r.setup_label.clone(),
            format_prob(r.rho_se_prev),
            r.n_pairs_se.to_string(),
            format_prob(r.rho_sp_prev),
            r.n_pairs_sp.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

struct Rows {
    source: String,
    records: Vec<csv::StringRecord>,
}

fn read_rows<R: Read>(input: R, source: &str, header: &[&str]) -> Result<Rows> {
    let malformed = |message: String| Error::Malformed {
        path: source.into(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let found = rdr.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(malformed(format!(
            "expected header `{}`, found `{}`",
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let records = rdr
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| malformed(e.to_string()))?;
    Ok(Rows {
        source: source.to_string(),
        records,
    })
}

impl Rows {
    fn error(&self, line: usize, message: impl std::fmt::Display) -> Error {
        Error::Malformed {
            path: self.source.clone().into(),
            message: format!("row {}: {message}", line + 2),
        }
    }

    fn count(&self, line: usize, rec: &csv::StringRecord, col: usize) -> Result<u64> {
        rec[col]
            .parse()
            .map_err(|_| self.error(line, format!("`{}` is not a count", &rec[col])))
    }

    fn optional(&self, line: usize, rec: &csv::StringRecord, col: usize) -> Result<Option<f64>> {
        let field = &rec[col];
        if field.is_empty() {
            return Ok(None);
        }
        let v: f64 = field
            .parse()
            .map_err(|_| self.error(line, format!("`{field}` is not a number")))?;
        if !v.is_finite() {
            return Err(self.error(line, format!("`{field}` is not finite")));
        }
        Ok(Some(v))
    }
}

pub fn read_estimates<R: Read>(input: R, source: &str) -> Result<Vec<EstimateRecord>> {
    let rows = read_rows(input, source, &ESTIMATES_HEADER)?;
    rows.records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let est = EstimateRecord {
                study_id: rows.count(i, rec, 0)?,
                setup_label: rec[1].to_string(),
                prev_hat: rows.optional(i, rec, 2)?,
                se_hat: rows.optional(i, rec, 3)?,
                sp_hat: rows.optional(i, rec, 4)?,
                n_ref_pos: rows.count(i, rec, 5)?,
                n_ref_neg: rows.count(i, rec, 6)?,
            };
            for v in [est.prev_hat, est.se_hat, est.sp_hat].into_iter().flatten() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(rows.error(i, format!("{v} is not a probability")));
                }
            }
            Ok(est)
        })
        .collect()
}

pub fn read_meta<R: Read>(input: R, source: &str) -> Result<Vec<MetaRow>> {
    let rows = read_rows(input, source, &META_HEADER)?;
    rows.records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let stratum = match &rec[2] {
                "" => None,
                "0" => Some(0),
                "1" => Some(1),
                other => return Err(rows.error(i, format!("stratum `{other}` is not 0 or 1"))),
            };
            let table = TwoByTwoTable {
                n_pp: rows.count(i, rec, 3)?,
                n_pn: rows.count(i, rec, 4)?,
                n_np: rows.count(i, rec, 5)?,
                n_nn: rows.count(i, rec, 6)?,
                stratum,
            };
            Ok(MetaRow {
                study_id: rows.count(i, rec, 0)?,
                setup: rec[1].to_string(),
                table,
            })
        })
        .collect()
}

pub fn read_verif<R: Read>(input: R, source: &str) -> Result<Vec<VerifRow>> {
    let rows = read_rows(input, source, &VERIF_HEADER)?;
    rows.records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let table = VerificationTable {
                n_total: rows.count(i, rec, 2)?,
                n1: rows.count(i, rec, 3)?,
                v1: rows.count(i, rec, 4)?,
                v0: rows.count(i, rec, 5)?,
                x1: rows.count(i, rec, 6)?,
                x0: rows.count(i, rec, 7)?,
            };
            if !table.is_consistent() {
                return Err(rows.error(i, "verification counts are inconsistent"));
            }
            Ok(VerifRow {
                study_id: rows.count(i, rec, 0)?,
                setup: rec[1].to_string(),
                table,
            })
        })
        .collect()
}

pub fn read_correlations<R: Read>(input: R, source: &str) -> Result<Vec<CorrelationReport>> {
    let rows = read_rows(input, source, &CORRELATIONS_HEADER)?;
    rows.records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            Ok(CorrelationReport {
                setup_label: rec[0].to_string(),
                rho_se_prev: rows.optional(i, rec, 1)?,
                n_pairs_se: rows.count(i, rec, 2)? as usize,
                rho_sp_prev: rows.optional(i, rec, 3)?,
                n_pairs_sp: rows.count(i, rec, 4)? as usize,
            })
        })
        .collect()
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}
