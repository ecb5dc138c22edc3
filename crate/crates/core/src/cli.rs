//! Command-line pipeline: simulate, correlate, fit and report.
//!
//! Every subcommand reads from `--input` (default: `--out`) and writes into
//! `--out`, recording checksums of what it wrote in `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::association::correlation_report;
use crate::error::{Error, Result};
use crate::io::{
    self, manifest, meta_rows, read_correlations, read_estimates, read_meta, read_verif,
    verif_rows, write_correlations, write_estimates, write_fit_document, write_meta, write_verif,
    FitBlock, FitDocument, MetaRow, ModelKind, RunConfig, RunManifest, RunPlan, VerifRow,
};
use crate::lcbm::{fit_lcbm, fit_lcbm_subgroup, MetaDataset};
use crate::mcmc::McmcConfig;
use crate::pvb::{fit_pvb, PvbMetaDataset};
use crate::sim::{run_scenario, BiasStructure, EstimateRecord};

pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const META_FILE: &str = "meta.csv";
pub const VERIF_FILE: &str = "verif.csv";
pub const CORRELATIONS_FILE: &str = "correlations.csv";
pub const FIT_FILE: &str = "fit.json";
/// Subdirectory of `all` holding the smaller meta-analysis that is fitted.
pub const FIT_DIR: &str = "fit";

#[derive(Debug, Parser)]
#[command(
    name = "dta-bias",
    version,
    about = "Simulate biased diagnostic accuracy meta-analyses and fit latent class models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate studies and write estimates.csv, meta.csv and (for partial verification) verif.csv
    Simulate,
    /// Compute per-setup Spearman correlations from estimates.csv
    Correlate,
    /// Fit a latent class model to meta.csv or verif.csv and write fit.json
    Fit,
    /// Write scatter SVGs and report.md from estimates.csv
    Report,
    /// Simulate, correlate, report, then simulate and fit a smaller meta-analysis
    All,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Bias structure (reference_standard_error, spectrum_effect, confounding, partial_verification, conditional_dependence)
    #[arg(long, global = true)]
    pub bias: Option<String>,
    /// Comma-separated setup numbers, or `all`
    #[arg(long, global = true)]
    pub setups: Option<String>,
    /// Studies per simulated meta-analysis
    #[arg(long, global = true)]
    pub studies: Option<usize>,
    /// Subjects per study
    #[arg(long, global = true)]
    pub subjects: Option<usize>,
    /// Studies in the meta-analysis fitted by `all`
    #[arg(long, global = true)]
    pub fit_studies: Option<usize>,
    /// Simulation seed; for `fit`, the sampler seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Model to fit: lcbm or pvb
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Fit each covariate stratum separately
    #[arg(long, global = true)]
    pub subgroup: bool,
    #[arg(long, global = true)]
    pub chains: Option<usize>,
    /// Iterations per chain, burn-in included
    #[arg(long, global = true)]
    pub iters: Option<usize>,
    #[arg(long, global = true)]
    pub burnin: Option<usize>,
    /// Input directory (defaults to the output directory)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

/// Settings after merging the configuration file and the flags.
struct Settings {
    config: RunConfig,
    mcmc: McmcConfig,
    model: Option<ModelKind>,
    subgroup: Option<bool>,
}

impl Options {
    fn input_dir(&self) -> &Path {
        self.input.as_deref().unwrap_or(&self.out)
    }

    fn settings(&self) -> Result<Settings> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                RunConfig::from_toml(&text).map_err(|e| Error::Config {
                    path: path.clone(),
                    message: e.to_string(),
                })?
            }
            None => RunConfig::default(),
        };
        if let Some(b) = &self.bias {
            config.scenario.bias = Some(b.clone());
        }
        if let Some(list) = &self.setups {
            config.scenario.setups = parse_setups(list)?;
        }
        config.seed = self.seed.or(config.seed);
        config.n_studies = self.studies.or(config.n_studies);
        config.n_subjects = self.subjects.or(config.n_subjects);
        config.fit_studies = self.fit_studies.or(config.fit_studies);

        let mut mcmc = config.mcmc.clone().unwrap_or_default();
        if let Some(c) = self.chains {
            mcmc.n_chains = c;
        }
        if let Some(n) = self.iters {
            mcmc.n_iters = n;
            if self.burnin.is_none() && mcmc.n_burnin >= n {
                mcmc.n_burnin = n / 2;
            }
        }
        if let Some(b) = self.burnin {
            mcmc.n_burnin = b;
        }
        mcmc.validate()?;
        config.mcmc = Some(mcmc.clone());

        let model = match &self.model {
            Some(m) => Some(m.parse()?),
            None => config.fit.model,
        };
        let subgroup = if self.subgroup {
            Some(true)
        } else {
            config.fit.subgroup
        };
        Ok(Settings {
            config,
            mcmc,
            model,
            subgroup,
        })
    }
}

fn parse_setups(list: &str) -> Result<Option<Vec<usize>>> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad setup number `{s}`")))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&args).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    execute(&cli, &command_line(&args))
}

pub fn command_line(args: &[std::ffi::OsString]) -> String {
    args.iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn execute(cli: &Cli, command_line: &str) -> Result<()> {
    let opts = &cli.options;
    let settings = opts.settings()?;
    let out = &opts.out;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let started = manifest::timestamp();

    let (seed, scenarios, written) = match cli.command {
        Command::Simulate => {
            let plan = settings.config.resolve()?;
            let files = simulate(&plan, plan.n_studies, out)?;
            (plan.seed, labels(&plan), files)
        }
        Command::Correlate => (0, Vec::new(), vec![correlate(opts.input_dir(), out)?]),
        Command::Report => (0, Vec::new(), report(opts.input_dir(), out, None)?),
        Command::Fit => {
            let model = settings.model.unwrap_or_default();
            let subgroup = settings.subgroup.unwrap_or(false);
            let mut mcmc = settings.mcmc.clone();
            if let Some(s) = opts.seed {
                mcmc.seed = s;
            }
            let wanted = settings.config.scenario.setups.clone();
            let file = fit(
                opts.input_dir(),
                out,
                model,
                subgroup,
                &mcmc,
                wanted.as_deref(),
            )?;
            (mcmc.seed, Vec::new(), vec![file])
        }
        Command::All => {
            let plan = settings.config.resolve()?;
            let model = settings.model.unwrap_or(default_model(plan.bias));
            let subgroup = settings.subgroup.unwrap_or(default_subgroup(plan.bias));
            let mut files = simulate(&plan, plan.n_studies, out)?;
            files.push(correlate(out, out)?);
            files.extend(report(out, out, Some(plan.bias))?);
            let fit_dir = out.join(FIT_DIR);
            fs::create_dir_all(&fit_dir).map_err(|e| Error::io(&fit_dir, e))?;
            let mut fit_files = simulate(&plan, plan.fit_studies, &fit_dir)?;
            fit_files.push(fit(&fit_dir, &fit_dir, model, subgroup, &plan.mcmc, None)?);
            files.extend(fit_files.into_iter().map(|f| format!("{FIT_DIR}/{f}")));
            (plan.seed, labels(&plan), files)
        }
    };

    let mut m = RunManifest::new(command_line.to_string(), seed, scenarios, started);
    for f in &written {
        m.add_output(out, f)?;
    }
    m.merge_previous(out);
    m.write(out)?;
    log::info!("wrote {} files to {}", written.len(), out.display());
    Ok(())
}

fn labels(plan: &RunPlan) -> Vec<String> {
    plan.setups
        .iter()
        .map(|s| format!("{}/{}", plan.bias.name(), s.label))
        .collect()
}

/// The model the full pipeline fits for each bias structure.
pub fn default_model(bias: BiasStructure) -> ModelKind {
    if bias.uses_verification() {
        ModelKind::Pvb
    } else {
        ModelKind::Lcbm
    }
}

/// Structures with a covariate are fitted within its strata by the full pipeline.
pub fn default_subgroup(bias: BiasStructure) -> bool {
    bias.uses_covariate()
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(fs::File) -> Result<()>) -> Result<String> {
    let path = dir.join(name);
    f(io::create(&path)?)?;
    Ok(name.to_string())
}

fn simulate(plan: &RunPlan, n_studies: usize, out: &Path) -> Result<Vec<String>> {
    let mut estimates = Vec::new();
    let mut meta = Vec::new();
    let mut verif = Vec::new();
    for setup in &plan.setups {
        let output = run_scenario(setup, n_studies, plan.n_subjects, plan.seed)?;
        log::info!(
            "simulated {} {} ({n_studies} studies)",
            plan.bias,
            setup.label
        );
        meta.extend(meta_rows(&output));
        if plan.bias.uses_verification() {
            verif.extend(verif_rows(&output));
        }
        estimates.extend(output.estimates);
    }
    let mut files = vec![
        write_file(out, ESTIMATES_FILE, |f| {
            write_estimates(&estimates, std::io::BufWriter::new(f))
        })?,
        write_file(out, META_FILE, |f| {
            write_meta(&meta, std::io::BufWriter::new(f))
        })?,
    ];
    if plan.bias.uses_verification() {
        files.push(write_file(out, VERIF_FILE, |f| {
            write_verif(&verif, std::io::BufWriter::new(f))
        })?);
    } else {
        let stale = out.join(VERIF_FILE);
        if stale.exists() {
            fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
        }
    }
    Ok(files)
}

fn load_estimates(dir: &Path) -> Result<Vec<EstimateRecord>> {
    let path = dir.join(ESTIMATES_FILE);
    read_estimates(io::open(&path)?, &path.display().to_string())
}

fn correlate(input: &Path, out: &Path) -> Result<String> {
    let estimates = load_estimates(input)?;
    let reports = correlation_report(&estimates);
    write_file(out, CORRELATIONS_FILE, |f| write_correlations(&reports, f))
}

fn report(input: &Path, out: &Path, bias: Option<BiasStructure>) -> Result<Vec<String>> {
    let estimates = load_estimates(input)?;
    let path = input.join(CORRELATIONS_FILE);
    let correlations = if path.is_file() {
        read_correlations(io::open(&path)?, &path.display().to_string())?
    } else {
        correlation_report(&estimates)
    };
    let title = match bias {
        Some(b) => format!("Naive correlations with prevalence: {b}"),
        None => "Naive correlations with prevalence".to_string(),
    };
    io::write_report(out, &title, &estimates, &correlations)
}

/// Groups rows by setup label in order of first appearance.
fn by_setup<T>(rows: Vec<T>, label: impl Fn(&T) -> &str) -> Vec<(String, Vec<T>)> {
    let mut groups: Vec<(String, Vec<T>)> = Vec::new();
    for row in rows {
        let key = label(&row);
        match groups.iter_mut().find(|(l, _)| l == key) {
            Some((_, v)) => v.push(row),
            None => groups.push((key.to_string(), vec![row])),
        }
    }
    groups
}

fn keep_setup(label: &str, wanted: Option<&[usize]>) -> bool {
    let Some(wanted) = wanted else {
        return true;
    };
    label
        .strip_prefix("Setup ")
        .and_then(|n| n.trim().parse::<usize>().ok())
        .is_some_and(|n| wanted.contains(&n))
}

fn fit(
    input: &Path,
    out: &Path,
    model: ModelKind,
    subgroup: bool,
    mcmc: &McmcConfig,
    wanted: Option<&[usize]>,
) -> Result<String> {
    let mut blocks = Vec::new();
    match model {
        ModelKind::Lcbm => {
            let path = input.join(META_FILE);
            let rows = read_meta(io::open(&path)?, &path.display().to_string())?;
            for (setup, rows) in by_setup(rows, |r: &MetaRow| r.setup.as_str()) {
                if !keep_setup(&setup, wanted) {
                    continue;
                }
                if subgroup {
                    let (ids, tables): (Vec<u64>, Vec<_>) = rows
                        .iter()
                        .filter(|r| r.table.stratum.is_some())
                        .map(|r| (r.study_id, r.table))
                        .unzip();
                    if tables.is_empty() {
                        return Err(Error::NoStrata);
                    }
                    for (stratum, fit) in fit_lcbm_subgroup(&ids, &tables, mcmc)? {
                        log::info!("fitted {setup} stratum R={stratum}");
                        blocks.push(FitBlock::new(&setup, Some(stratum), fit)?);
                    }
                } else {
                    let (ids, tables) = rows
                        .iter()
                        .filter(|r| r.table.stratum.is_none())
                        .map(|r| (r.study_id, r.table))
                        .unzip();
                    let fit = fit_lcbm(&MetaDataset::new(ids, tables)?, mcmc)?;
                    log::info!("fitted {setup}");
                    blocks.push(FitBlock::new(&setup, None, fit)?);
                }
            }
        }
        ModelKind::Pvb => {
            if subgroup {
                return Err(Error::InvalidConfig(
                    "subgroup fits are only available for the lcbm model".into(),
                ));
            }
            let path = input.join(VERIF_FILE);
            let rows = read_verif(io::open(&path)?, &path.display().to_string())?;
            for (setup, rows) in by_setup(rows, |r: &VerifRow| r.setup.as_str()) {
                if !keep_setup(&setup, wanted) {
                    continue;
                }
                let (ids, tables) = rows.iter().map(|r| (r.study_id, r.table)).unzip();
                let fit = fit_pvb(&PvbMetaDataset::new(ids, tables)?, mcmc)?;
                log::info!("fitted {setup}");
                blocks.push(FitBlock::new(&setup, None, fit)?);
            }
        }
    }
    if blocks.is_empty() {
        return Err(Error::InvalidDataset("no setups to fit".into()));
    }
    for b in blocks.iter().filter(|b| !b.converged) {
        log::warn!(
            "{} stratum {:?}: R-hat of at least one monitored parameter is 1.1 or more",
            b.setup,
            b.stratum
        );
    }
    let doc = FitDocument {
        model: model.name().to_string(),
        config: mcmc.clone(),
        fits: blocks,
    };
    write_file(out, FIT_FILE, |f| {
        write_fit_document(&doc, std::io::BufWriter::new(f))
    })
}
