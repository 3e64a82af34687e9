//! Manifest parsing, experiment dispatch and report emission for the `ftorus` binary.
//!
//! A manifest is a TOML file:
//!
//! ```toml
//! seed = 7            # required
//! out = "reports"     # optional, default "reports"
//! format = "csv"      # optional, "csv" or "json"
//!
//! [[run]]
//! experiment = "psd-audit"
//! ns = [4, 5, 6, 7, 8]
//! ```
//!
//! Each `[[run]]` table names an experiment and may override any field of its
//! default configuration (psi, theta, d, band, amps, ns, samples, tol, radius,
//! eps, ks, grid, sample_band, budget). Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ftorus_lab::{summarize, ExperimentConfig, ExperimentId, Overrides, ReportRow};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("seed required")]
    SeedRequired,
    #[error("no report rows to emit")]
    EmptyReport,
    #[error(transparent)]
    Experiment(#[from] ftorus_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub runs: Vec<ExperimentConfig>,
    pub out: PathBuf,
    pub seed: u64,
    pub format: Format,
}

pub const DEFAULT_OUT: &str = "reports";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    #[serde(default)]
    run: Vec<toml::Table>,
}

pub fn parse_config(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    parse_manifest(&text).map_err(|e| match e {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_manifest(text: &str) -> Result<RunManifest> {
    let raw: RawManifest = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let seed = raw.seed.ok_or(CliError::SeedRequired)?;
    let mut runs = Vec::with_capacity(raw.run.len());
    for (i, mut table) in raw.run.into_iter().enumerate() {
        let at = |key: &str| format!("run[{i}].{key}");
        let id = match table.remove("experiment") {
            Some(toml::Value::String(s)) => s
                .parse::<ExperimentId>()
                .map_err(|e| CliError::Schema { path: at("experiment"), msg: e.to_string() })?,
            Some(_) => return Err(CliError::Schema { path: at("experiment"), msg: "must be a string".into() }),
            None => return Err(CliError::Schema { path: format!("run[{i}]"), msg: "missing `experiment`".into() }),
        };
        let overrides: Overrides = table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Schema { path: format!("run[{i}]"), msg: e.message().to_string() })?;
        let cfg = ExperimentConfig::defaults(id, seed)
            .apply(&overrides)
            .map_err(|e| CliError::Schema { path: format!("run[{i}]"), msg: e.to_string() })?;
        runs.push(cfg);
    }
    Ok(RunManifest {
        runs,
        out: raw.out.unwrap_or_else(|| DEFAULT_OUT.into()),
        seed,
        format: raw.format.unwrap_or_default(),
    })
}

#[derive(Debug, Parser)]
#[command(name = "ftorus", version, about = "Fuzzy-torus matrix model experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run manifest.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the manifest seed; required without a manifest.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for the report file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Conditional negativity audit and model relation checks.
    Audit,
    /// Intertwining, Riesz identity, multiplier contraction and smoothing tails.
    Lip,
    /// Convergence rate, isometry defects and the rational fiber limit.
    Converge,
    /// Covering net of the Lipschitz ball.
    Net,
    /// Bridge reach between symbol algebra and matrix model.
    Reach,
    /// Every experiment.
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Audit => "audit",
            Command::Lip => "lip",
            Command::Converge => "converge",
            Command::Net => "net",
            Command::Reach => "reach",
            Command::All => "all",
        }
    }

    pub fn experiments(self) -> &'static [ExperimentId] {
        use ExperimentId::*;
        match self {
            Command::Audit => &[PsdAudit, ModelSanity],
            Command::Lip => &[Intertwining, Riesz, Multiplier, SmoothingTail],
            Command::Converge => &[Rate, Isometry, RationalFiber],
            Command::Net => &[CoveringNet],
            Command::Reach => &[BridgeReach],
            Command::All => &ExperimentId::ALL,
        }
    }
}

/// Merges the manifest (if any) with command-line overrides.
pub fn resolve_manifest(cli: &Cli) -> Result<RunManifest> {
    let mut m = match &cli.config {
        Some(path) => parse_config(path)?,
        None => RunManifest {
            runs: Vec::new(),
            out: DEFAULT_OUT.into(),
            seed: cli.seed.ok_or(CliError::SeedRequired)?,
            format: Format::default(),
        },
    };
    if let Some(seed) = cli.seed {
        m.seed = seed;
        for r in &mut m.runs {
            r.seed = seed;
        }
    }
    if let Some(out) = &cli.out {
        m.out = out.clone();
    }
    if let Some(f) = cli.format {
        m.format = f;
    }
    Ok(m)
}

/// Manifest runs belonging to the command, or the default configuration of each
/// of its experiments when the manifest lists none of them.
pub fn select_runs(manifest: &RunManifest, command: Command) -> Vec<ExperimentConfig> {
    let ids = command.experiments();
    let listed: Vec<ExperimentConfig> = manifest.runs.iter().filter(|r| ids.contains(&r.id)).cloned().collect();
    if listed.is_empty() {
        ids.iter().map(|&id| ExperimentConfig::defaults(id, manifest.seed)).collect()
    } else {
        listed
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const CSV_HEADER: &str = "experiment,n,metric,value,bound,pass";

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            csv_field(&r.experiment),
            r.n,
            csv_field(&r.metric),
            num(r.value),
            num(r.bound),
            r.pass
        );
    }
    s
}

/// JSON number with 17 significant digits; NaN and ±∞ become strings.
fn json_num(x: f64) -> String {
    if x.is_finite() {
        num(x)
    } else {
        serde_json::to_string(&x.to_string()).expect("string")
    }
}

pub fn render_json(rows: &[ReportRow]) -> String {
    let js = |s: &str| serde_json::to_string(s).expect("string");
    let mut s = String::from("[\n");
    for (i, r) in rows.iter().enumerate() {
        let _ = write!(
            s,
            "  {{\"experiment\": {}, \"n\": {}, \"metric\": {}, \"value\": {}, \"bound\": {}, \"pass\": {}}}",
            js(&r.experiment),
            r.n,
            js(&r.metric),
            json_num(r.value),
            json_num(r.bound),
            r.pass
        );
        s.push_str(if i + 1 < rows.len() { ",\n" } else { "\n" });
    }
    s.push_str("]\n");
    s
}

pub fn summary_lines(rows: &[ReportRow]) -> Vec<String> {
    summarize(rows)
        .into_iter()
        .map(|(exp, total, passed)| {
            let verdict = if passed == total { "PASS" } else { "FAIL" };
            format!("{exp}: {verdict} ({passed}/{total} rows pass)")
        })
        .collect()
}

/// Writes `report.csv` or `report.json` into the output directory.
pub fn emit_report(rows: &[ReportRow], manifest: &RunManifest) -> Result<PathBuf> {
    if rows.is_empty() {
        return Err(CliError::EmptyReport);
    }
    let dir = &manifest.out;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    let path = dir.join(format!("report.{}", manifest.format.extension()));
    let body = match manifest.format {
        Format::Csv => render_csv(rows),
        Format::Json => render_json(rows),
    };
    std::fs::write(&path, body).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

pub struct Outcome {
    pub rows: Vec<ReportRow>,
    pub report: PathBuf,
    pub all_pass: bool,
}

/// Runs the selected experiments in order, writes the report and prints the
/// per-experiment summary.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let manifest = resolve_manifest(cli)?;
    let mut rows = Vec::new();
    for cfg in select_runs(&manifest, cli.command) {
        rows.extend(ftorus_lab::run(&cfg)?);
    }
    let report = emit_report(&rows, &manifest)?;
    for line in summary_lines(&rows) {
        println!("{line}");
    }
    let all_pass = rows.iter().all(|r| r.pass);
    println!("report: {}", report.display());
    Ok(Outcome { rows, report, all_pass })
}
