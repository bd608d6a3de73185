use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand};

use crate::channel::ChannelModel;
use crate::lattice::{SearchDomain, DEFAULT_NODE_BUDGET};
use crate::receivers::ReceiverKind;

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "IA_SIM_OUT";
const FALLBACK_OUT_DIR: &str = "results";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("unknown flag '{0}'")]
    UnknownFlag(String),
    #[error("missing value: {0}")]
    MissingValue(String),
    #[error("conflicting flags: '{0}' cannot be used with '{1}'")]
    ConflictingFlags(String, String),
    #[error("invalid value '{value}' for '{flag}': {reason}")]
    InvalidValue { flag: String, value: String, reason: String },
    #[error("{}: {message}", path.display())]
    ConfigFile { path: PathBuf, message: String },
    /// `--help` or `--version`; the text goes to stdout with exit status 0.
    #[error("{0}")]
    Display(String),
}

#[derive(Debug, Parser)]
#[command(name = "ia-sim", version, about = "Interference alignment SER simulator: zero forcing vs lattice decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo SER sweep over a target SNR grid; writes CSV and metadata.
    Sweep(SweepFlags),
    /// Oracle checks: alignment, equivalent channel, sphere vs exhaustive
    /// search, GLRT identity, projector invariants.
    Verify(VerifyFlags),
    /// Renders sweep CSVs as an SVG plot of SER against measured SNR.
    Plot(PlotFlags),
}

#[derive(Debug, Default, Args)]
struct ChannelFlags {
    /// Blocklength parameter; the block spans 2n+1 subcarriers.
    #[arg(long)]
    n: Option<usize>,
    /// Channel model: unit or trunc.
    #[arg(long)]
    model: Option<String>,
    /// Lower magnitude bound of the truncated model.
    #[arg(long, allow_negative_numbers = true)]
    lo: Option<f64>,
    /// Upper magnitude bound of the truncated model.
    #[arg(long, allow_negative_numbers = true)]
    hi: Option<f64>,
    /// qam4 or qam16.
    #[arg(long)]
    constellation: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SweepFlags {
    #[command(flatten)]
    channel: ChannelFlags,
    /// Comma-separated subset of lzf_linear, lzf_glrt, ld.
    #[arg(long)]
    receivers: Option<String>,
    /// Target SNR grid in dB as start:step:stop.
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<String>,
    /// Explicit comma-separated noise standard deviations (skips calibration).
    #[arg(long)]
    noise_std: Option<String>,
    /// Trials per grid point.
    #[arg(long)]
    trials: Option<u64>,
    /// Trials in the calibration pilot pass (default: same as --trials).
    #[arg(long)]
    pilot_trials: Option<u64>,
    #[arg(long)]
    node_budget: Option<u64>,
    /// constrained (finite alphabet) or unbounded (lattice search then clip).
    #[arg(long)]
    search_domain: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, or auto.
    #[arg(long)]
    threads: Option<String>,
    /// Flat key = value file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyFlags {
    #[command(flatten)]
    channel: ChannelFlags,
    /// Random instances per property.
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Debug, Args)]
struct PlotFlags {
    /// Sweep CSV files; every (receiver, n) pair becomes one series.
    #[arg(required = true)]
    csv: Vec<PathBuf>,
    /// Output SVG path (default: first CSV with .svg extension).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Fixed(usize),
}

/// Grid of targets or explicit noise levels.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    TargetSnrDb(Vec<f64>),
    NoiseStd(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepArgs {
    pub n: usize,
    pub model: ChannelModel,
    pub constellation_order: usize,
    pub receivers: Vec<ReceiverKind>,
    pub grid: Grid,
    pub trials: u64,
    pub pilot_trials: Option<u64>,
    pub seed: u64,
    pub node_budget: u64,
    pub search_domain: SearchDomain,
    pub out: PathBuf,
    pub threads: Threads,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyArgs {
    pub n: usize,
    pub model: ChannelModel,
    pub constellation_order: usize,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotArgs {
    pub csv: Vec<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliInvocation {
    Sweep(SweepArgs),
    Verify(VerifyArgs),
    Plot(PlotArgs),
}

fn invalid(flag: &str, value: &str, reason: impl Into<String>) -> CliError {
    CliError::InvalidValue { flag: format!("--{flag}"), value: value.to_string(), reason: reason.into() }
}

fn context_str(e: &clap::Error, kind: ContextKind) -> Option<String> {
    match e.get(kind)? {
        ContextValue::String(s) => Some(s.clone()),
        ContextValue::Strings(v) => v.first().cloned(),
        _ => None,
    }
}

fn from_clap(e: clap::Error) -> CliError {
    let arg = context_str(&e, ContextKind::InvalidArg).unwrap_or_default();
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            CliError::Display(e.render().to_string())
        }
        ErrorKind::UnknownArgument | ErrorKind::InvalidSubcommand => CliError::UnknownFlag(arg),
        ErrorKind::MissingRequiredArgument | ErrorKind::MissingSubcommand => {
            CliError::MissingValue(if arg.is_empty() { "subcommand".into() } else { arg })
        }
        ErrorKind::InvalidValue | ErrorKind::ValueValidation => {
            let value = context_str(&e, ContextKind::InvalidValue).unwrap_or_default();
            let reason = if value.is_empty() { "a value is required".to_string() } else { "cannot parse".to_string() };
            CliError::InvalidValue { flag: arg, value, reason }
        }
        ErrorKind::ArgumentConflict => {
            let other = context_str(&e, ContextKind::PriorArg).unwrap_or_default();
            CliError::ConflictingFlags(arg, other)
        }
        _ => CliError::InvalidValue { flag: arg, value: String::new(), reason: e.kind().to_string() },
    }
}

/// Flat `key = value` lines; `#` starts a comment. Keys are flag names
/// without the leading dashes.
fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::ConfigFile { path: path.to_path_buf(), message: e.to_string() })?;
    parse_config_text(&text).map_err(|message| CliError::ConfigFile { path: path.to_path_buf(), message })
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

const CONFIG_KEYS: [&str; 15] = [
    "n",
    "model",
    "lo",
    "hi",
    "constellation",
    "seed",
    "receivers",
    "snr-db",
    "noise-std",
    "trials",
    "pilot-trials",
    "node-budget",
    "search-domain",
    "out",
    "threads",
];

/// Flag value if given, else config-file value, parsed with `FromStr`.
fn pick<T: std::str::FromStr>(
    flag: Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| invalid(key, v, "cannot parse")),
    }
}

fn parse_model(model: Option<String>, lo: Option<f64>, hi: Option<f64>) -> Result<ChannelModel, CliError> {
    match model.as_deref().unwrap_or("unit") {
        "unit" => {
            if lo.is_some() {
                return Err(CliError::ConflictingFlags("--lo".into(), "--model unit".into()));
            }
            if hi.is_some() {
                return Err(CliError::ConflictingFlags("--hi".into(), "--model unit".into()));
            }
            Ok(ChannelModel::UnitModulus)
        }
        "trunc" => {
            let lo = lo.ok_or_else(|| CliError::MissingValue("--model trunc requires --lo".into()))?;
            let hi = hi.ok_or_else(|| CliError::MissingValue("--model trunc requires --hi".into()))?;
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(invalid("hi", &hi.to_string(), format!("need 0 < lo < hi, got lo = {lo}")));
            }
            Ok(ChannelModel::TruncatedGaussian { lo, hi })
        }
        other => Err(invalid("model", other, "expected unit or trunc")),
    }
}

fn parse_constellation(s: Option<String>) -> Result<usize, CliError> {
    match s.as_deref().unwrap_or("qam4") {
        "qam4" => Ok(4),
        "qam16" => Ok(16),
        other => Err(invalid("constellation", other, "expected qam4 or qam16")),
    }
}

pub fn parse_receivers(s: &str) -> Result<Vec<ReceiverKind>, CliError> {
    let mut out = Vec::new();
    for name in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let kind = ReceiverKind::parse(name).ok_or_else(|| invalid("receivers", name, "expected lzf_linear, lzf_glrt or ld"))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    Ok(out)
}

/// `start:step:stop`, inclusive of `stop` when it lies on the grid.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = |reason: &str| invalid("snr-db", s, reason);
    if parts.len() != 3 {
        return Err(bad("expected start:step:stop"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("expected numbers"))?;
    let (start, step, stop) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(bad("need step > 0 and stop >= start"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

fn parse_noise_list(s: &str) -> Result<Vec<f64>, CliError> {
    let mut v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid("noise-std", s, "expected comma-separated numbers"))?;
    if v.is_empty() || v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(invalid("noise-std", s, "values must be positive"));
    }
    // highest noise first, i.e. ascending SNR
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup();
    Ok(v)
}

fn parse_threads(s: Option<String>) -> Result<Threads, CliError> {
    match s.as_deref() {
        None | Some("auto") => Ok(Threads::Auto),
        Some(t) => match t.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Threads::Fixed(k)),
            _ => Err(invalid("threads", t, "expected a positive integer or auto")),
        },
    }
}

fn parse_search_domain(s: Option<String>) -> Result<SearchDomain, CliError> {
    match s.as_deref().unwrap_or("constrained") {
        "constrained" => Ok(SearchDomain::Constrained),
        "unbounded" => Ok(SearchDomain::Unbounded),
        other => Err(invalid("search-domain", other, "expected constrained or unbounded")),
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

fn sweep_args(f: SweepFlags) -> Result<SweepArgs, CliError> {
    let file = match &f.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    if let Some(key) = file.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(CliError::UnknownFlag(format!("--{key}")));
    }
    let c = f.channel;
    let n = pick(c.n, &file, "n")?.unwrap_or(1);
    if n == 0 {
        return Err(invalid("n", "0", "must be at least 1"));
    }
    let model = parse_model(pick(c.model, &file, "model")?, pick(c.lo, &file, "lo")?, pick(c.hi, &file, "hi")?)?;

    // a grid given by flag replaces whatever grid the file holds
    let (snr, noise) = if f.snr_db.is_some() || f.noise_std.is_some() {
        (f.snr_db, f.noise_std)
    } else {
        (file.get("snr-db").cloned(), file.get("noise-std").cloned())
    };
    let grid = match (snr, noise) {
        (Some(_), Some(_)) => return Err(CliError::ConflictingFlags("--snr-db".into(), "--noise-std".into())),
        (Some(s), None) => Grid::TargetSnrDb(parse_snr_grid(&s)?),
        (None, Some(s)) => Grid::NoiseStd(parse_noise_list(&s)?),
        (None, None) => return Err(CliError::MissingValue("sweep needs --snr-db or --noise-std".into())),
    };

    let trials = pick(f.trials, &file, "trials")?.unwrap_or(1000);
    if trials == 0 {
        return Err(invalid("trials", "0", "must be at least 1"));
    }
    let pilot_trials = pick(f.pilot_trials, &file, "pilot-trials")?;
    if pilot_trials == Some(0) {
        return Err(invalid("pilot-trials", "0", "must be at least 1"));
    }
    if pilot_trials.is_some() && matches!(grid, Grid::NoiseStd(_)) {
        return Err(CliError::ConflictingFlags("--pilot-trials".into(), "--noise-std".into()));
    }
    let receivers = match pick(f.receivers, &file, "receivers")? {
        Some(s) => parse_receivers(&s)?,
        None => vec![ReceiverKind::LzfLinear, ReceiverKind::Ld],
    };
    Ok(SweepArgs {
        n,
        model,
        constellation_order: parse_constellation(pick(c.constellation, &file, "constellation")?)?,
        receivers,
        grid,
        trials,
        pilot_trials,
        seed: pick(c.seed, &file, "seed")?.unwrap_or(0),
        node_budget: pick(f.node_budget, &file, "node-budget")?.unwrap_or(DEFAULT_NODE_BUDGET),
        search_domain: parse_search_domain(pick(f.search_domain, &file, "search-domain")?)?,
        out: pick(f.out, &file, "out")?.unwrap_or_else(default_out_dir),
        threads: parse_threads(pick(f.threads, &file, "threads")?)?,
    })
}

fn verify_args(f: VerifyFlags) -> Result<VerifyArgs, CliError> {
    let c = f.channel;
    let n = c.n.unwrap_or(1);
    if n == 0 {
        return Err(invalid("n", "0", "must be at least 1"));
    }
    Ok(VerifyArgs {
        n,
        model: parse_model(c.model, c.lo, c.hi)?,
        constellation_order: parse_constellation(c.constellation)?,
        trials: f.trials.unwrap_or(1000),
        seed: c.seed.unwrap_or(0),
    })
}

/// Parses a full argument vector (program name first).
pub fn parse_args<I, T>(argv: I) -> Result<CliInvocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(from_clap)?;
    match cli.command {
        Command::Sweep(f) => sweep_args(f).map(CliInvocation::Sweep),
        Command::Verify(f) => verify_args(f).map(CliInvocation::Verify),
        Command::Plot(f) => {
            let out = f.out.unwrap_or_else(|| f.csv[0].with_extension("svg"));
            Ok(CliInvocation::Plot(PlotArgs { csv: f.csv, out }))
        }
    }
}
