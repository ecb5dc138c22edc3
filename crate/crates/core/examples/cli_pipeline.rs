//! Drives the command-line pipeline from code: simulate, correlate and
//! report a small grid, then confirm the manifest checksums.

use dta_bias::cli::run_from;
use dta_bias::io::read_manifest;

fn main() -> dta_bias::Result<()> {
    let out = std::env::temp_dir().join("dta-bias-cli-example");
    let out_arg = out.to_string_lossy().into_owned();
    for cmd in ["simulate", "correlate", "report"] {
        run_from([
            "dta-bias",
            cmd,
            "--bias",
            "confounding",
            "--studies",
            "500",
            "--out",
            &out_arg,
        ])?;
    }
    let manifest = read_manifest(&out)?;
    println!("{} files in {}", manifest.outputs.len(), out.display());
    println!("checksum mismatches: {:?}", manifest.verify(&out));
    print!(
        "{}",
        std::fs::read_to_string(out.join("correlations.csv")).unwrap_or_default()
    );
    Ok(())
}
