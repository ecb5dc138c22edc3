//! Scatter figures and a markdown summary of the naive correlations.

use std::fmt::Write as _;
use std::path::Path;

use super::svg::{scatter_svg, Marker};
use crate::association::CorrelationReport;
use crate::error::{Error, Result};
use crate::sim::EstimateRecord;

pub const REPORT_FILE: &str = "report.md";

/// `"Setup 1"` becomes `"setup_1"`.
pub fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.trim().chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn setup_number(label: &str, position: usize) -> usize {
    label
        .strip_prefix("Setup ")
        .and_then(|n| n.trim().parse().ok())
        .unwrap_or(position + 1)
}

fn fmt_rho(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |r| format!("{r:.3}"))
}

/// Markdown table of correlations.
pub fn correlation_table(title: &str, reports: &[CorrelationReport]) -> String {
    let mut s = format!("# {title}\n\n");
    if reports.is_empty() {
        s.push_str("No estimates.\n");
        return s;
    }
    s.push_str("| setup | rho(se, prev) | n | rho(sp, prev) | n |\n");
    s.push_str("|---|---:|---:|---:|---:|\n");
    for r in reports {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            r.setup_label,
            fmt_rho(r.rho_se_prev),
            r.n_pairs_se,
            fmt_rho(r.rho_sp_prev),
            r.n_pairs_sp
        );
    }
    s
}

/// Writes `scatter_<setup>_{se,sp}.svg` for every setup and `report.md`.
/// Returns the names of the written files.
pub fn write_report(
    dir: &Path,
    title: &str,
    estimates: &[EstimateRecord],
    correlations: &[CorrelationReport],
) -> Result<Vec<String>> {
    if estimates.is_empty() {
        log::warn!("no estimates to report");
    }
    let mut labels: Vec<&str> = Vec::new();
    for e in estimates {
        if !labels.contains(&e.setup_label.as_str()) {
            labels.push(&e.setup_label);
        }
    }
    let mut written = Vec::new();
    let mut body = correlation_table(title, correlations);
    if !labels.is_empty() {
        body.push_str("\n## Figures\n\n");
    }
    for (pos, label) in labels.iter().enumerate() {
        let marker = Marker::for_setup(setup_number(label, pos));
        let rows: Vec<&EstimateRecord> = estimates
            .iter()
            .filter(|e| e.setup_label == *label)
            .collect();
        for (key, name, pick) in [
            (
                "se",
                "sensitivity",
                (|e: &EstimateRecord| e.se_hat) as fn(&EstimateRecord) -> Option<f64>,
            ),
            ("sp", "specificity", |e: &EstimateRecord| e.sp_hat),
        ] {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|e| Some((e.prev_hat?, pick(e)?)))
                .collect();
            let svg = scatter_svg(
                &points,
                &format!("{label}: estimated {name}"),
                "estimated prevalence",
                &format!("estimated {name}"),
                marker,
            );
            let file = format!("scatter_{}_{key}.svg", slug(label));
            let path = dir.join(&file);
            std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
            let _ = writeln!(body, "- [{label} {name}]({file})");
            written.push(file);
        }
    }
    let path = dir.join(REPORT_FILE);
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    written.push(REPORT_FILE.to_string());
    Ok(written)
}
