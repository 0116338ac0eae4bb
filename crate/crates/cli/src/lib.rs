//! Driver behind the `hyperlattice` binary: configuration parsing, the run
//! manifest, and the `run` subcommand.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperlattice::harness::run_experiment;
use hyperlattice::lattice::estimate_tail;
use hyperlattice::suites::{identities_suite, AcceptanceSuite, CriterionReport, DEFAULT_SUITE_SEED};
use hyperlattice::{ExperimentConfig, ExperimentResult, LatticeSampler};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_VERSION: u32 = 1;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_REJECTED: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },

    #[error("{path}: experiment {index}{}: {source}", name.as_deref().map(|n| format!(" ({n})")).unwrap_or_default())]
    Invalid { path: PathBuf, index: usize, name: Option<String>, source: hyperlattice::Error },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("experiment {index}{}: {source}", name.as_deref().map(|n| format!(" ({n})")).unwrap_or_default())]
    Run { index: usize, name: Option<String>, source: hyperlattice::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("thread pool: {0}")]
    ThreadPool(String),

    #[error("{failed} of {total} criteria failed")]
    SuiteFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use hyperlattice::Error as E;
        match self {
            CliError::Config(_) => EXIT_INVALID,
            CliError::Run { source, .. } => match source {
                E::PointBudget { .. } | E::TailTolerance { .. } => EXIT_REJECTED,
                E::InvalidParameter(_) | E::DimensionMismatch { .. } | E::Hypothesis { .. } | E::Expansion(_) => {
                    EXIT_INVALID
                }
                _ => EXIT_FAILURE,
            },
            _ => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hyperlattice", version, about = "Monte Carlo experiments on perturbed lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run experiments from JSON configuration files, or a built-in suite.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    Acceptance,
    Identities,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Configuration files; each holds one experiment object or an array of them.
    #[arg(required_unless_present = "suite", conflicts_with = "suite")]
    pub configs: Vec<PathBuf>,

    /// Run a built-in suite instead of configuration files.
    #[arg(long, value_enum)]
    pub suite: Option<SuiteName>,

    /// Restrict the acceptance suite to these criteria.
    #[arg(long = "criterion", requires = "suite")]
    pub criteria: Vec<u8>,

    /// Where to write the JSON manifest (stdout when omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    /// Directory for per-experiment CSV dumps of the normalized statistics.
    #[arg(long)]
    pub samples_dir: Option<PathBuf>,

    /// Master seed overriding every configuration's `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads.
    #[arg(long, env = "HYPERLATTICE_THREADS")]
    pub threads: Option<usize>,

    /// Validate and print the point budget and tail estimate without sampling.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRecord {
    pub name: SuiteName,
    pub reports: Vec<CriterionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub crate_version: String,
    /// SHA-256 of the configuration files' bytes, concatenated in order.
    pub config_digest: Option<String>,
    pub seed: Option<u64>,
    /// False while the run is still in progress or was interrupted.
    pub complete: bool,
    pub duration_secs: f64,
    pub experiments: Vec<ExperimentResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteRecord>,
}

impl RunManifest {
    fn new(config_digest: Option<String>, seed: Option<u64>) -> Self {
        RunManifest {
            version: MANIFEST_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest,
            seed,
            complete: false,
            duration_secs: 0.0,
            experiments: Vec::new(),
            suite: None,
        }
    }
}

fn position_error(path: &Path, err: serde_json::Error) -> ConfigError {
    ConfigError::Parse { path: path.to_path_buf(), line: err.line(), column: err.column(), message: err.to_string() }
}

/// Parses and validates configuration text. `path` only labels errors.
pub fn parse_config_str(text: &str, path: &Path) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let configs = if text.trim_start().starts_with('[') {
        serde_json::from_str::<Vec<ExperimentConfig>>(text).map_err(|e| position_error(path, e))?
    } else {
        vec![serde_json::from_str::<ExperimentConfig>(text).map_err(|e| position_error(path, e))?]
    };
    for (index, cfg) in configs.iter().enumerate() {
        cfg.validate().map_err(|source| ConfigError::Invalid {
            path: path.to_path_buf(),
            index,
            name: cfg.name.clone(),
            source,
        })?;
    }
    Ok(configs)
}

pub fn parse_config(path: &Path) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text, path)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn write_manifest(out: Option<&Path>, manifest: &RunManifest) -> Result<(), CliError> {
    if let Some(path) = out {
        let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        text.push('\n');
        write_file(path, text.as_bytes())?;
    }
    Ok(())
}

fn slug(name: Option<&str>) -> String {
    let s: String = name
        .unwrap_or("experiment")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "experiment".into()
    } else {
        s
    }
}

/// One value per line, shortest round-trip decimal form.
pub fn samples_csv(samples: &[f64]) -> String {
    let mut out = String::with_capacity(samples.len() * 20);
    for x in samples {
        let _ = writeln!(out, "{x:?}");
    }
    out
}

/// Human-readable budget and tail summary of one configuration.
pub fn dry_run_line(index: usize, cfg: &ExperimentConfig) -> String {
    let s = &cfg.sample;
    let t = &s.truncation;
    let mut line = format!(
        "experiment {index} ({}): d={} r={} regime {} replicates {}, window half-width {} ({} points, budget {})",
        cfg.name.as_deref().unwrap_or("unnamed"),
        s.dimension,
        s.r,
        cfg.regime.name(),
        cfg.replicates,
        s.half_width(),
        s.window_points(),
        t.point_budget,
    );
    match estimate_tail(s) {
        Ok(tail) => {
            let _ = write!(
                line,
                ", tail bound {:.3e} via {:?} (tolerance {:.3e}, {})",
                tail.bound,
                tail.method,
                t.tail_tol,
                if t.enforce { "enforced" } else { "report only" }
            );
        }
        Err(e) => {
            let _ = write!(line, ", tail estimate unavailable: {e}");
        }
    }
    match LatticeSampler::new(s.clone()) {
        Ok(sampler) => {
            let points = (2 * sampler.inner_half_width() + 1).pow(s.dimension as u32);
            let _ = write!(line, ": ok, {points} sites per replicate");
        }
        Err(e) => {
            let _ = write!(line, ": would be rejected: {e}");
        }
    }
    line
}

/// Executes `run`; progress goes to `log`, the manifest to `--out` or `stdout`.
pub fn run(args: &RunArgs, stdout: &mut dyn Write, log: &mut dyn Write) -> Result<RunManifest, CliError> {
    if let Some(n) = args.threads {
        // A second call in the same process keeps the first pool.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            if rayon::current_num_threads() != n {
                return Err(CliError::ThreadPool(e.to_string()));
            }
        }
    }
    let start = Instant::now();
    let mut manifest = match args.suite {
        Some(name) => run_suite(name, args, log)?,
        None => run_configs(args, stdout, log, start)?,
    };
    manifest.duration_secs = start.elapsed().as_secs_f64();
    manifest.complete = true;
    if args.dry_run {
        return Ok(manifest);
    }
    match &args.out {
        Some(path) => write_manifest(Some(path), &manifest)?,
        None => {
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            let _ = writeln!(stdout, "{text}");
        }
    }
    if let Some(suite) = &manifest.suite {
        let failed = suite.reports.iter().filter(|r| !r.passed).count();
        if failed > 0 {
            return Err(CliError::SuiteFailed { failed, total: suite.reports.len() });
        }
    }
    Ok(manifest)
}

fn run_configs(
    args: &RunArgs,
    stdout: &mut dyn Write,
    log: &mut dyn Write,
    start: Instant,
) -> Result<RunManifest, CliError> {
    let mut hasher = Sha256::new();
    let mut configs = Vec::new();
    for path in &args.configs {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
        hasher.update(&bytes);
        let text = String::from_utf8_lossy(&bytes);
        configs.extend(parse_config_str(&text, path)?);
    }
    if let Some(seed) = args.seed {
        for cfg in &mut configs {
            cfg.master_seed = seed;
        }
    }
    let digest = hex::encode(hasher.finalize());
    let mut manifest = RunManifest::new(Some(digest), args.seed);

    if args.dry_run {
        for (i, cfg) in configs.iter().enumerate() {
            let _ = writeln!(stdout, "{}", dry_run_line(i, cfg));
        }
        return Ok(manifest);
    }
    if let Some(dir) = &args.samples_dir {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.clone(), source })?;
    }
    for (index, cfg) in configs.iter().enumerate() {
        let _ = writeln!(log, "running experiment {index} ({})", cfg.name.as_deref().unwrap_or("unnamed"));
        let result =
            run_experiment(cfg).map_err(|source| CliError::Run { index, name: cfg.name.clone(), source })?;
        if let Some(dir) = &args.samples_dir {
            let path = dir.join(format!("{index:03}_{}.csv", slug(cfg.name.as_deref())));
            write_file(&path, samples_csv(&result.samples).as_bytes())?;
        }
        manifest.experiments.push(result);
        manifest.duration_secs = start.elapsed().as_secs_f64();
        // Rewritten after every experiment so an interrupted run keeps its results.
        write_manifest(args.out.as_deref(), &manifest)?;
    }
    Ok(manifest)
}

fn run_suite(name: SuiteName, args: &RunArgs, log: &mut dyn Write) -> Result<RunManifest, CliError> {
    let seed = args.seed.unwrap_or(DEFAULT_SUITE_SEED);
    let mut manifest = RunManifest::new(None, Some(seed));
    if args.dry_run {
        return Ok(manifest);
    }
    let reports = match name {
        SuiteName::Identities => identities_suite(),
        SuiteName::Acceptance => {
            let suite = AcceptanceSuite::new(seed);
            let ids: Vec<u8> = if args.criteria.is_empty() { AcceptanceSuite::IDS.to_vec() } else { args.criteria.clone() };
            let mut reports = Vec::with_capacity(ids.len());
            for id in ids {
                let report = suite.run(id);
                let _ = writeln!(log, "{report}");
                reports.push(report);
            }
            reports
        }
    };
    if name == SuiteName::Identities {
        for r in &reports {
            let _ = writeln!(log, "{r}");
        }
    }
    manifest.suite = Some(SuiteRecord { name, reports });
    Ok(manifest)
}
