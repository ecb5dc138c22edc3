//! End-to-end runs of the command-line pipeline on small inputs.

use std::fs;
use std::path::Path;

use dta_bias::association::correlation_report;
use dta_bias::cli::run_from;
use dta_bias::io::{
    meta_rows, read_correlations, read_estimates, read_fit_document, read_manifest, read_meta,
    read_verif, verif_rows, write_estimates, write_meta, write_verif,
};
use dta_bias::sim::{make_scenario_grid, run_scenario, BiasStructure};
use dta_bias::Error;

fn run(dir: &Path, args: &[&str]) -> dta_bias::Result<()> {
    let out = dir.to_string_lossy().into_owned();
    let mut full = vec!["dta-bias"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &out]);
    run_from(full)
}

#[test]
fn simulate_writes_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    run(
        dir.path(),
        &[
            "simulate",
            "--bias",
            "rseb",
            "--studies",
            "50",
            "--seed",
            "3",
        ],
    )
    .unwrap();
    let est = read_estimates(
        fs::File::open(dir.path().join("estimates.csv")).unwrap(),
        "e",
    )
    .unwrap();
    assert_eq!(est.len(), 4 * 50);
    let header = fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
    assert!(header.starts_with("study_id,setup,prev_hat,se_hat,sp_hat,n_ref_pos,n_ref_neg\n"));
    assert!(!dir.path().join("verif.csv").exists());
    let manifest = read_manifest(dir.path()).unwrap();
    assert_eq!(manifest.seed, 3);
    assert_eq!(manifest.scenarios.len(), 4);
    assert!(manifest.outputs.contains_key("meta.csv"));
}

#[test]
fn correlate_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    run(
        dir.path(),
        &[
            "simulate",
            "--bias",
            "confounding",
            "--studies",
            "300",
            "--seed",
            "8",
        ],
    )
    .unwrap();
    run(dir.path(), &["correlate"]).unwrap();
    let from_file = read_correlations(
        fs::File::open(dir.path().join("correlations.csv")).unwrap(),
        "c",
    )
    .unwrap();

    let mut direct = Vec::new();
    for setup in make_scenario_grid(BiasStructure::Confounding) {
        let out = run_scenario(&setup, 300, 500, 8).unwrap();
        direct.extend(correlation_report(&out.estimates));
    }
    assert_eq!(from_file.len(), direct.len());
    for (f, d) in from_file.iter().zip(&direct) {
        assert_eq!(f.setup_label, d.setup_label);
        assert_eq!((f.n_pairs_se, f.n_pairs_sp), (d.n_pairs_se, d.n_pairs_sp));
        assert!((f.rho_se_prev.unwrap() - d.rho_se_prev.unwrap()).abs() <= 5e-7);
        assert!((f.rho_sp_prev.unwrap() - d.rho_sp_prev.unwrap()).abs() <= 5e-7);
    }
}

#[test]
fn report_writes_two_figures_per_setup() {
    let dir = tempfile::tempdir().unwrap();
    run(
        dir.path(),
        &["simulate", "--bias", "rseb", "--studies", "40"],
    )
    .unwrap();
    run(dir.path(), &["report"]).unwrap();
    let svgs: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().to_string_lossy().into_owned();
            name.ends_with(".svg").then_some(name)
        })
        .collect();
    assert_eq!(svgs.len(), 8);
    assert!(dir.path().join("scatter_setup_4_sp.svg").exists());
    let md = fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("| Setup 1 |"));
}

#[test]
fn subgroup_fit_has_a_block_per_stratum() {
    let dir = tempfile::tempdir().unwrap();
    run(
        dir.path(),
        &[
            "simulate",
            "--bias",
            "spectrum",
            "--setups",
            "1",
            "--studies",
            "12",
        ],
    )
    .unwrap();
    run(
        dir.path(),
        &["fit", "--subgroup", "--chains", "2", "--iters", "400"],
    )
    .unwrap();
    let doc = read_fit_document(fs::File::open(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(doc.model, "lcbm");
    let strata: Vec<_> = doc
        .fits
        .iter()
        .map(|f| (f.setup.as_str(), f.stratum))
        .collect();
    assert_eq!(strata, [("Setup 1", Some(0)), ("Setup 1", Some(1))]);
    assert!(doc.fits.iter().all(|f| f.per_study.len() == 12));
}

#[test]
fn pvb_fit_reads_verification_tables() {
    let dir = tempfile::tempdir().unwrap();
    run(
        dir.path(),
        &[
            "simulate",
            "--bias",
            "pvb",
            "--setups",
            "1,4",
            "--studies",
            "10",
        ],
    )
    .unwrap();
    run(
        dir.path(),
        &[
            "fit", "--model", "pvb", "--setups", "1", "--chains", "2", "--iters", "300",
        ],
    )
    .unwrap();
    let doc = read_fit_document(fs::File::open(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(doc.model, "pvb");
    assert_eq!(doc.fits.len(), 1);
    assert!(doc.fits[0].summaries.contains_key("mean_sp_ref"));
    assert!(!doc.fits[0].summaries.contains_key("rho_index"));
}

#[test]
fn structural_errors() {
    let dir = tempfile::tempdir().unwrap();
    run(
        dir.path(),
        &[
            "simulate",
            "--bias",
            "rseb",
            "--setups",
            "1",
            "--studies",
            "5",
        ],
    )
    .unwrap();
    let e = run(dir.path(), &["fit", "--subgroup", "--iters", "200"]).unwrap_err();
    assert!(matches!(e, Error::NoStrata), "{e}");
    assert!(run(dir.path(), &["fit", "--model", "pvb", "--iters", "200"]).is_err());
    assert!(matches!(
        run(dir.path(), &["simulate", "--bias", "workup"]),
        Err(Error::UnknownBias(_))
    ));

    fs::write(dir.path().join("estimates.csv"), "study_id,setup\n1,x\n").unwrap();
    assert!(matches!(
        run(dir.path(), &["correlate"]),
        Err(Error::Malformed { .. })
    ));
}

#[test]
fn config_file_drives_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "seed = 5\nn_studies = 20\n[scenario]\nbias = \"partial_verification\"\nsetups = [2]\n\
         [grid]\nverification = { low = 0.1, high = 0.9 }\n",
    )
    .unwrap();
    let cfg = cfg.to_string_lossy().into_owned();
    run(dir.path(), &["simulate", "--config", &cfg]).unwrap();
    let verif = read_verif(fs::File::open(dir.path().join("verif.csv")).unwrap(), "v").unwrap();
    assert_eq!(verif.len(), 20);
    assert!(verif.iter().all(|r| r.setup == "Setup 2"));

    fs::write(
        dir.path().join("bad.toml"),
        "[scenario]\nbias = \"rseb\"\n[grid]\nprevalence = 1\n",
    )
    .unwrap();
    let bad = dir.path().join("bad.toml").to_string_lossy().into_owned();
    let e = run(dir.path(), &["simulate", "--config", &bad]).unwrap_err();
    assert!(e.to_string().contains("line 4"), "{e}");
}

#[test]
fn csv_round_trips() {
    let setup = &make_scenario_grid(BiasStructure::PartialVerification)[0];
    let out = run_scenario(setup, 30, 200, 2).unwrap();

    let meta = meta_rows(&out);
    let mut buf = Vec::new();
    write_meta(&meta, &mut buf).unwrap();
    assert_eq!(read_meta(buf.as_slice(), "m").unwrap(), meta);

    let verif = verif_rows(&out);
    let mut buf = Vec::new();
    write_verif(&verif, &mut buf).unwrap();
    assert_eq!(read_verif(buf.as_slice(), "v").unwrap(), verif);

    // estimates keep six decimals, so a second round trip is exact
    let mut buf = Vec::new();
    write_estimates(&out.estimates, &mut buf).unwrap();
    let once = read_estimates(buf.as_slice(), "e").unwrap();
    for (a, b) in once.iter().zip(&out.estimates) {
        assert!((a.se_hat.unwrap() - b.se_hat.unwrap()).abs() <= 5e-7);
        assert_eq!(a.n_ref_pos, b.n_ref_pos);
    }
    let mut again = Vec::new();
    write_estimates(&once, &mut again).unwrap();
    assert_eq!(again, buf);
    assert_eq!(read_estimates(again.as_slice(), "e").unwrap(), once);
}
