//! Command-line interface: weight constants, pair estimation from tick
//! CSVs, scenario simulation, and the Monte Carlo study.
//!
//! Errors exit nonzero with a JSON body on stderr. A flat key=value config
//! file can supply defaults for most flags; explicit flags win.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pthy::error::{Error, Result};
use pthy::harness::{emit_table, run_mc, EstimatorKind, McConfig, TableFormat};
use pthy::report::{estimate_pair, EstimateConfig, ThresholdChoice};
use pthy::sampling::{read_ticks_csv, write_ticks_csv, IngestOptions, DEFAULT_SESSION_SECONDS};
use pthy::simulate::{simulate, JumpKind, Model, SimScenario};
use pthy::threshold::DEFAULT_EPSILON;
use pthy::weights::{make_min_weight, WeightProfile};

#[derive(Parser)]
#[command(
    name = "pthy",
    version,
    about = "Integrated covariance and jump covariation from noisy, nonsynchronous ticks"
)]
struct Cli {
    /// Flat key=value config file supplying defaults for flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the weight constants as JSON.
    Constants(ConstantsArgs),
    /// Estimate integrated covariance and jump covariation of two tick CSVs.
    Estimate(EstimateArgs),
    /// Simulate one scenario and write tick CSVs plus the ground truth.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo study and print the bias/RMSE table.
    Mc(McArgs),
}

#[derive(Args)]
struct ConstantsArgs {
    /// Weight function: "min" or "file:<csv with x,g columns>".
    #[arg(long, default_value = "min")]
    weight: String,
}

#[derive(Args)]
struct EstimateArgs {
    /// Tick CSV of the first asset (header time,price).
    #[arg(long)]
    a: PathBuf,
    /// Tick CSV of the second asset.
    #[arg(long)]
    b: PathBuf,
    /// Pre-averaging tuning parameter.
    #[arg(long)]
    theta: Option<f64>,
    /// Threshold rule: "plut", "plut:<epsilon>", "none", or
    /// "file:<rho1.csv>[,<rho2.csv>]".
    #[arg(long)]
    thresholds: Option<String>,
    /// Evaluation time in normalized session units.
    #[arg(long)]
    t: Option<f64>,
    /// Confidence level; adds the asymptotic-variance block.
    #[arg(long)]
    ci: Option<f64>,
    /// Override of the variance-estimation block length.
    #[arg(long)]
    h_n: Option<f64>,
    /// Session length in seconds used to normalize the time column.
    #[arg(long)]
    session_seconds: Option<f64>,
    /// Treat the price column as already logged.
    #[arg(long)]
    no_log: bool,
    /// Also write the JSON report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long, value_enum)]
    jumps: JumpsArg,
    /// Average waiting times "l1,l2" in grid steps.
    #[arg(long)]
    lambda: String,
    /// Euler grid size.
    #[arg(long)]
    n: Option<usize>,
    /// Jump size parameter.
    #[arg(long)]
    c: Option<f64>,
    /// Jump shape parameter.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for asset1.csv, asset2.csv and truth.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long, value_enum)]
    jumps: JumpsArg,
    /// Average waiting times "l1,l2" in grid steps.
    #[arg(long)]
    lambda: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Comma-separated subset of pthy,bpv,phy-pthy,rv-bpv.
    #[arg(long)]
    estimators: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    /// PLUT exponent bump.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::One => Model::Model1,
            ModelArg::Two => Model::Model2,
            ModelArg::Three => Model::Model3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum JumpsArg {
    No,
    Scp1,
    Vg,
}

impl From<JumpsArg> for JumpKind {
    fn from(j: JumpsArg) -> JumpKind {
        match j {
            JumpsArg::No => JumpKind::No,
            JumpsArg::Scp1 => JumpKind::Scp1,
            JumpsArg::Vg => JumpKind::Vg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Text,
    Json,
}

/// Defaults loaded from the key=value config file.
struct Config {
    map: HashMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "theta",
    "epsilon",
    "session_seconds",
    "log_prices",
    "reps",
    "n",
    "seed",
    "format",
    "t",
    "ci",
    "h_n",
    "thresholds",
    "estimators",
];

impl Config {
    fn load(path: Option<&Path>) -> Result<Config> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let body = std::fs::read_to_string(path)?;
            for (lineno, line) in body.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "config line {} is not key=value: {line:?}",
                        lineno + 1
                    ))
                })?;
                let key = key.trim().to_string();
                if !CONFIG_KEYS.contains(&key.as_str()) {
                    return Err(Error::InvalidParameter(format!(
                        "unknown config key {key:?}"
                    )));
                }
                map.insert(key, value.trim().to_string());
            }
        }
        Ok(Config { map })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidParameter(format!("config key {key} has invalid value {raw:?}"))
            }),
        }
    }
}

/// flag > config > default
fn resolve<T: std::str::FromStr + Copy>(
    flag: Option<T>,
    cfg: &Config,
    key: &str,
    default: T,
) -> Result<T> {
    Ok(flag.or(cfg.get(key)?).unwrap_or(default))
}

fn parse_lambda(raw: &str) -> Result<(f64, f64)> {
    let (a, b) = raw
        .split_once(',')
        .ok_or_else(|| Error::InvalidParameter(format!("lambda must be \"l1,l2\", got {raw:?}")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("bad lambda component {s:?}")))
    };
    Ok((parse(a)?, parse(b)?))
}

fn load_weight(spec: &str) -> Result<WeightProfile> {
    if spec == "min" {
        return Ok(make_min_weight());
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for row in rdr.deserialize() {
            let (x, g): (f64, f64) = row?;
            xs.push(x);
            ys.push(g);
        }
        return WeightProfile::from_table(&xs, &ys);
    }
    Err(Error::InvalidParameter(format!(
        "weight must be \"min\" or \"file:<path>\", got {spec:?}"
    )))
}

fn parse_thresholds(spec: &str) -> Result<ThresholdSpecArg> {
    if spec == "none" {
        return Ok(ThresholdSpecArg::None);
    }
    if spec == "plut" {
        return Ok(ThresholdSpecArg::Plut(DEFAULT_EPSILON));
    }
    if let Some(eps) = spec.strip_prefix("plut:") {
        let eps: f64 = eps
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad plut epsilon {eps:?}")))?;
        return Ok(ThresholdSpecArg::Plut(eps));
    }
    if let Some(paths) = spec.strip_prefix("file:") {
        let parts: Vec<&str> = paths.split(',').collect();
        let (p1, p2) = match parts.as_slice() {
            [one] => (one.to_string(), one.to_string()),
            [one, two] => (one.to_string(), two.to_string()),
            _ => {
                return Err(Error::InvalidParameter(
                    "thresholds file spec takes one or two paths".into(),
                ))
            }
        };
        return Ok(ThresholdSpecArg::Files(p1, p2));
    }
    Err(Error::InvalidParameter(format!(
        "thresholds must be plut[:eps], none or file:<path>[,<path>], got {spec:?}"
    )))
}

enum ThresholdSpecArg {
    None,
    Plut(f64),
    Files(String, String),
}

fn read_threshold_column(path: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let value: f64 = row?;
        out.push(value);
    }
    Ok(out)
}

fn parse_estimators(raw: &str) -> Result<Vec<EstimatorKind>> {
    let mut out = Vec::new();
    for part in raw.split(',') {
        let kind = match part.trim().to_ascii_lowercase().as_str() {
            "pthy" => EstimatorKind::Pthy,
            "bpv" => EstimatorKind::Bpv,
            "phy-pthy" => EstimatorKind::PhyMinusPthy,
            "rv-bpv" => EstimatorKind::RvMinusBpv,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown estimator {other:?} (expected pthy, bpv, phy-pthy, rv-bpv)"
                )))
            }
        };
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    Ok(out)
}

fn cmd_constants(args: &ConstantsArgs) -> Result<String> {
    let w = load_weight(&args.weight)?;
    Ok(serde_json::to_string_pretty(&json!({
        "psi_hy": w.psi_hy,
        "psi1": w.psi1,
        "psi2": w.psi2,
        "kappa": w.kappa,
        "kappa_tilde": w.kappa_tilde,
        "kappa_bar": w.kappa_bar,
    }))?)
}

fn cmd_estimate(args: &EstimateArgs, cfg: &Config) -> Result<String> {
    let session = resolve(
        args.session_seconds,
        cfg,
        "session_seconds",
        DEFAULT_SESSION_SECONDS,
    )?;
    let log_prices = if args.no_log {
        false
    } else {
        cfg.get::<bool>("log_prices")?.unwrap_or(true)
    };
    let ingest = IngestOptions {
        session_seconds: session,
        log_prices,
    };
    let a = read_ticks_csv(&args.a, &ingest)?;
    let b = read_ticks_csv(&args.b, &ingest)?;

    let threshold_raw = match &args.thresholds {
        Some(raw) => raw.clone(),
        None => cfg
            .get::<String>("thresholds")?
            .unwrap_or_else(|| "plut".to_string()),
    };
    let thresholds = match parse_thresholds(&threshold_raw)? {
        ThresholdSpecArg::None => ThresholdChoice::None,
        ThresholdSpecArg::Plut(epsilon) => ThresholdChoice::Plut { epsilon },
        ThresholdSpecArg::Files(p1, p2) => ThresholdChoice::Fixed {
            rho1: read_threshold_column(&p1)?,
            rho2: read_threshold_column(&p2)?,
        },
    };

    let estimate_cfg = EstimateConfig {
        theta: resolve(args.theta, cfg, "theta", 0.15)?,
        t: resolve(args.t, cfg, "t", 1.0)?,
        thresholds,
        ci: match args.ci {
            Some(level) => Some(level),
            None => cfg.get::<f64>("ci")?,
        },
        h_n: match args.h_n {
            Some(h) => Some(h),
            None => cfg.get::<f64>("h_n")?,
        },
    };
    let report = estimate_pair(&a, &b, &make_min_weight(), &estimate_cfg)?;
    let body = serde_json::to_string_pretty(&report)?;
    if let Some(out) = &args.out {
        std::fs::write(out, &body)?;
    }
    Ok(body)
}

fn cmd_simulate(args: &SimulateArgs, cfg: &Config) -> Result<String> {
    let scn = SimScenario {
        model: args.model.into(),
        jumps: args.jumps.into(),
        lambda: parse_lambda(&args.lambda)?,
        n: resolve(args.n, cfg, "n", 23_400)?,
        c: args.c.unwrap_or(0.1),
        gamma: args.gamma.unwrap_or(0.25),
        seed: resolve(args.seed, cfg, "seed", 0)?,
    };
    let out = simulate(&scn)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let ingest = IngestOptions::default();
    write_ticks_csv(&args.out_dir.join("asset1.csv"), &out.ticks1, &ingest)?;
    write_ticks_csv(&args.out_dir.join("asset2.csv"), &out.ticks2, &ingest)?;
    let truth = json!({
        "scenario": scn,
        "true_ic": out.true_ic,
        "true_jv": out.true_jv,
    });
    std::fs::write(
        args.out_dir.join("truth.json"),
        serde_json::to_string_pretty(&truth)?,
    )?;
    Ok(serde_json::to_string_pretty(&json!({
        "out_dir": args.out_dir,
        "ticks1": out.ticks1.len(),
        "ticks2": out.ticks2.len(),
    }))?)
}

fn cmd_mc(args: &McArgs, cfg: &Config) -> Result<String> {
    let scn = SimScenario {
        model: args.model.into(),
        jumps: args.jumps.into(),
        lambda: parse_lambda(&args.lambda)?,
        n: resolve(args.n, cfg, "n", 23_400)?,
        c: 0.1,
        gamma: 0.25,
        seed: resolve(args.seed, cfg, "seed", 0)?,
    };
    let reps = resolve(args.reps, cfg, "reps", 300)?;
    let estimators = match &args.estimators {
        Some(raw) => parse_estimators(raw)?,
        None => match cfg.get::<String>("estimators")? {
            Some(raw) => parse_estimators(&raw)?,
            None => EstimatorKind::all(),
        },
    };
    let mc_cfg = McConfig {
        theta: resolve(args.theta, cfg, "theta", 0.15)?,
        epsilon: resolve(args.epsilon, cfg, "epsilon", DEFAULT_EPSILON)?,
        estimators,
        ..McConfig::default()
    };
    let rows = run_mc(&scn, reps, &mc_cfg)?;
    let format = match args.format {
        Some(FormatArg::Csv) => TableFormat::Csv,
        Some(FormatArg::Text) => TableFormat::Text,
        Some(FormatArg::Json) => TableFormat::Json,
        None => match cfg.get::<String>("format")?.as_deref() {
            Some("csv") => TableFormat::Csv,
            Some("text") | None => TableFormat::Text,
            Some("json") => TableFormat::Json,
            Some(other) => {
                return Err(Error::InvalidParameter(format!("unknown format {other:?}")))
            }
        },
    };
    emit_table(&rows, format)
}

fn run() -> Result<String> {
    let cli = Cli::parse();
    let cfg = Config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Constants(args) => cmd_constants(args),
        Command::Estimate(args) => cmd_estimate(args, &cfg),
        Command::Simulate(args) => cmd_simulate(args, &cfg),
        Command::Mc(args) => cmd_mc(args, &cfg),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(body) => {
            print!("{body}");
            if !body.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", json!({ "error": err.to_string() }));
            ExitCode::FAILURE
        }
    }
}
