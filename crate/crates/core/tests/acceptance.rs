//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test --release --test acceptance`.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF};

use dta_bias::association::{analytic_naive_accuracy, correlation_report, CorrelationReport};
use dta_bias::cli::run_from;
use dta_bias::io::{read_manifest, MANIFEST_FILE};
use dta_bias::lcbm::{self, adjusted_association, cell_probabilities, fit_lcbm, MetaDataset};
use dta_bias::mcmc::{quantile_sorted, run_prevalence_chain, McmcConfig};
use dta_bias::pvb::{fit_pvb, stage_probs, PvbMetaDataset};
use dta_bias::sim::{
    make_scenario_grid, run_scenario, Accuracy, BiasStructure, Bounds, ScenarioSetup, TwoByTwoTable,
};

const SEED: u64 = 20_240_601;
const STUDIES: usize = 10_000;
const SUBJECTS: usize = 500;

/// Collects the individual checks of one criterion.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn near(&mut self, what: &str, value: Option<f64>, target: f64, tol: f64) {
        match value {
            Some(v) if (v - target).abs() <= tol => self.notes.push(format!("{what} {v:.3}")),
            Some(v) => self
                .failures
                .push(format!("{what} {v:.3} not within {tol} of {target}")),
            None => self.failures.push(format!("{what} missing")),
        }
    }

    fn at_most(&mut self, what: &str, value: Option<f64>, bound: f64) {
        match value {
            Some(v) if v.abs() <= bound => self.notes.push(format!("{what} {v:.3}")),
            Some(v) => self.failures.push(format!("{what} |{v:.3}| > {bound}")),
            None => self.failures.push(format!("{what} missing")),
        }
    }

    fn below(&mut self, what: &str, value: Option<f64>, bound: f64) {
        match value {
            Some(v) if v.abs() < bound => self.notes.push(format!("{what} {v:.3}")),
            Some(v) => self.failures.push(format!("{what} |{v:.3}| >= {bound}")),
            None => self.failures.push(format!("{what} missing")),
        }
    }

    fn require(&mut self, what: &str, ok: bool) {
        if ok {
            self.notes.push(what.to_string());
        } else {
            self.failures.push(what.to_string());
        }
    }
}

fn correlations(setups: &[ScenarioSetup]) -> Vec<CorrelationReport> {
    setups
        .iter()
        .map(|s| {
            let out = run_scenario(s, STUDIES, SUBJECTS, SEED).expect("valid setup");
            correlation_report(&out.estimates).remove(0)
        })
        .collect()
}

fn grid(structure: BiasStructure) -> Vec<CorrelationReport> {
    correlations(&make_scenario_grid(structure))
}

fn c1_reference_standard_error(c: &mut Checks) {
    let r = grid(BiasStructure::ReferenceStandardError);
    for (i, (se, sp)) in [(0.870, -0.975), (0.864, -0.968), (0.856, -0.936)]
        .into_iter()
        .enumerate()
    {
        c.near(&format!("S{} se", i + 1), r[i].rho_se_prev, se, 0.02);
        c.near(&format!("S{} sp", i + 1), r[i].rho_sp_prev, sp, 0.01);
    }
    c.at_most("S4 se", r[3].rho_se_prev, 0.05);
    c.at_most("S4 sp", r[3].rho_sp_prev, 0.05);
}

fn c2_spectrum(c: &mut Checks) {
    let r = grid(BiasStructure::SpectrumEffect);
    for (i, (se, sp)) in [(0.645, -0.930), (0.632, -0.893), (0.600, -0.786)]
        .into_iter()
        .enumerate()
    {
        c.near(&format!("S{} se", i + 1), r[i].rho_se_prev, se, 0.03);
        c.near(&format!("S{} sp", i + 1), r[i].rho_sp_prev, sp, 0.02);
    }
    c.at_most("S4 se", r[3].rho_se_prev, 0.05);
    c.at_most("S4 sp", r[3].rho_sp_prev, 0.05);
}

fn c3_confounding(c: &mut Checks) {
    let r = grid(BiasStructure::Confounding);
    for (i, se) in [0.461, 0.395, 0.335, -0.599].into_iter().enumerate() {
        c.near(&format!("S{} se", i + 1), r[i].rho_se_prev, se, 0.03);
    }
    for (i, sp) in [-0.956, -0.947, -0.915, -0.621].into_iter().enumerate() {
        c.near(&format!("S{} sp", i + 1), r[i].rho_sp_prev, sp, 0.03);
    }
}

fn c4_partial_verification(c: &mut Checks) {
    let r = grid(BiasStructure::PartialVerification);
    for (i, (se, sp)) in [(0.821, -0.967), (0.808, -0.955), (0.806, -0.918)]
        .into_iter()
        .enumerate()
    {
        c.near(&format!("S{} se", i + 1), r[i].rho_se_prev, se, 0.03);
        c.near(&format!("S{} sp", i + 1), r[i].rho_sp_prev, sp, 0.02);
    }
    c.at_most("S4 se", r[3].rho_se_prev, 0.07);
    c.at_most("S4 sp", r[3].rho_sp_prev, 0.08);
}

fn c5_verification_rates(c: &mut Checks) {
    let variants = [
        (
            "high",
            Bounds::new(0.7, 0.9),
            [0.842, 0.841, 0.830, -0.017],
            0.03,
            [-0.973, -0.965, -0.930, -0.012],
            0.02,
        ),
        (
            "low",
            Bounds::new(0.1, 0.9),
            [0.744, 0.717, 0.716, 0.230],
            0.03,
            [-0.922, -0.898, -0.834, -0.260],
            0.03,
        ),
    ];
    for (name, rate, se, se_tol, sp, sp_tol) in variants {
        let setups: Vec<ScenarioSetup> = make_scenario_grid(BiasStructure::PartialVerification)
            .into_iter()
            .map(|mut s| {
                s.verification = Some(rate);
                s
            })
            .collect();
        let r = correlations(&setups);
        for i in 0..4 {
            c.near(
                &format!("{name} S{} se", i + 1),
                r[i].rho_se_prev,
                se[i],
                se_tol,
            );
            c.near(
                &format!("{name} S{} sp", i + 1),
                r[i].rho_sp_prev,
                sp[i],
                sp_tol,
            );
        }
    }
}

fn c6_conditional_dependence(c: &mut Checks) {
    let r = grid(BiasStructure::ConditionalDependence);
    for (i, (se, sp)) in [(0.704, 0.928), (0.697, 0.896), (0.687, 0.811)]
        .into_iter()
        .enumerate()
    {
        c.near(&format!("S{} se", i + 1), r[i].rho_se_prev, se, 0.03);
        c.near(&format!("S{} sp", i + 1), r[i].rho_sp_prev, -sp, 0.02);
    }
}

fn fit_dataset(structure: BiasStructure) -> dta_bias::sim::ScenarioOutput {
    let setup = &make_scenario_grid(structure)[0];
    run_scenario(setup, 100, SUBJECTS, SEED).expect("valid setup")
}

fn c7_lcbm_adjustment(c: &mut Checks) {
    let sim = fit_dataset(BiasStructure::ReferenceStandardError);
    let ds = MetaDataset::from_tables(sim.tables.iter().map(|t| t.pooled).collect()).unwrap();
    let start = Instant::now();
    let fit = fit_lcbm(&ds, &McmcConfig::default()).expect("fit");
    let elapsed = start.elapsed();
    for (name, s) in &fit.summaries {
        c.below(&format!("rhat {name}"), s.rhat, 1.1);
    }
    c.near("index se", Some(fit.median("mean_se_index")), 0.9, 0.05);
    c.near("index sp", Some(fit.median("mean_sp_index")), 0.9, 0.05);
    let (se, sp) = adjusted_association(&fit).unwrap();
    c.below("adjusted se", se, 0.2);
    c.below("adjusted sp", sp, 0.2);
    c.require(
        &format!("runtime {:.0}s < 900s", elapsed.as_secs_f64()),
        elapsed.as_secs() < 900,
    );
}

fn c8_pvb_adjustment(c: &mut Checks) {
    let sim = fit_dataset(BiasStructure::PartialVerification);
    let ds =
        PvbMetaDataset::from_tables(sim.tables.iter().map(|t| t.verification).collect()).unwrap();
    let fit = fit_pvb(&ds, &McmcConfig::default()).expect("fit");
    c.near("index se", Some(fit.median("mean_se_index")), 0.9, 0.07);
    c.near("index sp", Some(fit.median("mean_sp_index")), 0.9, 0.07);
    c.near("reference se", Some(fit.median("mean_se_ref")), 0.7, 0.07);
    c.near("reference sp", Some(fit.median("mean_sp_ref")), 0.95, 0.07);
    let (se, sp) = adjusted_association(&fit).unwrap();
    c.below("adjusted se", se, 0.2);
    c.below("adjusted sp", sp, 0.2);
}

fn c9_conjugate_oracle(c: &mut Checks) {
    // perfect reference: the likelihood in the prevalence is π^d (1 − π)^(n − d)
    let table = TwoByTwoTable::new(27, 4, 3, 66);
    let d = table.ref_positive() as f64;
    let n = table.n() as f64;
    let index = Accuracy::new(0.9, 0.9);
    let config = McmcConfig {
        n_iters: 5_000 + 50_000 * 10,
        n_burnin: 5_000,
        thin: 10,
        ..McmcConfig::default()
    };
    let mut draws = run_prevalence_chain(
        |p| lcbm::table_log_likelihood(&table, p, Accuracy::PERFECT, index),
        0.5,
        &config,
        SEED,
    )
    .unwrap();
    c.require(&format!("{} draws", draws.len()), draws.len() == 50_000);
    draws.sort_by(f64::total_cmp);
    let beta = Beta::new(1.0 + d, 1.0 + n - d).unwrap();
    for q in [0.025, 0.5, 0.975] {
        c.near(
            &format!("q{q}"),
            Some(quantile_sorted(&draws, q)),
            beta.inverse_cdf(q),
            0.01,
        );
    }
}

fn grid_values(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..5).map(|_| rng.random_range(0.01..0.99)).collect()
}

fn c10_analytic_oracles(c: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let axes: Vec<Vec<f64>> = (0..5).map(|_| grid_values(&mut rng)).collect();
    let mut worst: f64 = 0.0;
    let mut total_prob: f64 = 0.0;
    for &prev in &axes[0] {
        for &s1 in &axes[1] {
            for &c1 in &axes[2] {
                for &s2 in &axes[3] {
                    for &c2 in &axes[4] {
                        let reference = Accuracy::new(s1, c1);
                        let index = Accuracy::new(s2, c2);
                        // joint[a][b]: reference result a, index result b
                        let mut joint = [[0.0; 2]; 2];
                        for dz in [true, false] {
                            let pd = if dz { prev } else { 1.0 - prev };
                            for a in [true, false] {
                                let pa = if a == dz {
                                    if dz {
                                        s1
                                    } else {
                                        c1
                                    }
                                } else if dz {
                                    1.0 - s1
                                } else {
                                    1.0 - c1
                                };
                                for b in [true, false] {
                                    let pb = if b == dz {
                                        if dz {
                                            s2
                                        } else {
                                            c2
                                        }
                                    } else if dz {
                                        1.0 - s2
                                    } else {
                                        1.0 - c2
                                    };
                                    joint[a as usize][b as usize] += pd * pa * pb;
                                }
                            }
                        }
                        let cells = cell_probabilities(prev, reference, index).unwrap();
                        for (got, want) in [
                            (cells.p11, joint[1][1]),
                            (cells.p10, joint[1][0]),
                            (cells.p01, joint[0][1]),
                            (cells.p00, joint[0][0]),
                        ] {
                            worst = worst.max((got - want).abs());
                        }
                        let (se, sp) = analytic_naive_accuracy(prev, reference, index).unwrap();
                        let ref_pos = joint[1][1] + joint[1][0];
                        worst = worst.max((se - joint[1][1] / ref_pos).abs());
                        worst = worst.max((sp - joint[0][0] / (1.0 - ref_pos)).abs());

                        let st = stage_probs(prev, index, reference).unwrap();
                        let p1 = joint[1][1] + joint[0][1];
                        worst = worst.max((st.p1 - p1).abs());
                        worst = worst.max((st.q1 - joint[1][1] / p1).abs());
                        worst = worst.max((st.q0 - joint[1][0] / (1.0 - p1)).abs());
                        let lhs = st.q1 * st.p1 + st.q0 * (1.0 - st.p1);
                        let rhs = prev * s1 + (1.0 - prev) * (1.0 - c1);
                        total_prob = total_prob.max((lhs - rhs).abs());
                    }
                }
            }
        }
    }
    c.require(
        &format!("enumeration error {worst:.1e} <= 1e-12"),
        worst <= 1e-12,
    );
    c.require(
        &format!("total probability error {total_prob:.1e} <= 1e-12"),
        total_prob <= 1e-12,
    );
}

fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n != MANIFEST_FILE) {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                files.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn c11_determinism(c: &mut Checks) {
    for bias in ["partial_verification", "spectrum_effect"] {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let mut seed = SEED.to_string();
        for dir in &dirs {
            let out = dir.path().to_string_lossy().into_owned();
            run_from([
                "dta-bias",
                "all",
                "--bias",
                bias,
                "--studies",
                "400",
                "--fit-studies",
                "20",
                "--iters",
                "2000",
                "--chains",
                "2",
                "--seed",
                &seed,
                "--out",
                &out,
            ])
            .expect("pipeline");
            let manifest = read_manifest(dir.path()).unwrap();
            c.require(
                &format!("{bias}: manifest checksums match"),
                manifest.verify(dir.path()).is_empty(),
            );
            seed = manifest.seed.to_string();
        }
        let (a, b) = (outputs(dirs[0].path()), outputs(dirs[1].path()));
        let kinds = ["csv", "svg", "json"]
            .iter()
            .all(|k| a.keys().any(|f| f.ends_with(k)));
        c.require(&format!("{bias}: {} CSV/SVG/JSON files", a.len()), kinds);
        c.require(&format!("{bias}: byte-identical rerun"), a == b);
    }
}

type Criterion = (&'static str, fn(&mut Checks));

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 reference standard error", c1_reference_standard_error),
        ("2 spectrum effect", c2_spectrum),
        ("3 confounding", c3_confounding),
        ("4 partial verification", c4_partial_verification),
        ("5 verification rate variants", c5_verification_rates),
        ("6 conditional dependence", c6_conditional_dependence),
        ("7 bivariate model adjustment", c7_lcbm_adjustment),
        ("8 verification model adjustment", c8_pvb_adjustment),
        ("9 conjugate prevalence oracle", c9_conjugate_oracle),
        ("10 analytic oracles", c10_analytic_oracles),
        ("11 determinism", c11_determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, run) in criteria {
        let number = name.split(' ').next().unwrap();
        if !filter.is_empty() && !filter.iter().any(|f| f == number) {
            continue;
        }
        let start = Instant::now();
        let mut checks = Checks::default();
        run(&mut checks);
        let status = if checks.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "criterion {name}: {status} ({:.1}s)",
            start.elapsed().as_secs_f64()
        );
        if checks.failures.is_empty() {
            println!("    {}", checks.notes.join(", "));
        } else {
            failed += 1;
            for f in &checks.failures {
                println!("    {f}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
