//! Command-line front end.
//!
//! Every subcommand accepts `--config FILE`, a file of `key = value` lines
//! whose keys are flag names without the leading dashes. Flags given on the
//! command line override the file. Output goes to `--out` or standard output;
//! the resolved configuration is echoed to standard error.
//!
//! Exit codes: 0 on success, 1 on runtime errors, 2 on usage errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::bounds;
use crate::connectivity::connectivity_experiment;
use crate::estimators::{Estimator, MAX_MAP_N};
use crate::experiments::{
    adjacent_failure_census, failure_event_mc, phase_sweep, run_trial, trial_seed, SweepConfig,
    TruthMode,
};
use crate::model::{apply_permutation, gap_stats, LinkFunction, ProbMatrix, QualityVector};
use crate::report;
use crate::sampler::{sample_batch, DesignParams, MaskMode};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "RANKLIMITS_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "ranklimits",
    version,
    about = "Exact-recovery experiments for ranking from noisy pairwise comparisons",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recovery thresholds for (n, m, p, K0).
    Thresholds(ThresholdsArgs),
    /// Run individual trials and print one row per estimator and trial.
    Simulate(SimulateArgs),
    /// Exact-recovery rate over a grid of gap scales.
    Phase(PhaseArgs),
    /// Connectivity of the observed comparison graph at p = (ln n + c)/(m n).
    Connectivity(ConnectivityArgs),
    /// Monte Carlo swap-failure probability with its analytic bounds.
    FailureEvent(FailureEventArgs),
    /// Adjacent-pair swap-failure counts per batch.
    Census(CensusArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// File of `key = value` lines; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 = all cores. Falls back to RANKLIMITS_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LinkKind {
    Logistic,
    Linear,
    Table,
}

/// Ground-truth model: the uniform-gap family `w[i] = scale (n - i) / n`
/// under a link function, or an explicit matrix file.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = LinkKind::Logistic)]
    pub link: LinkKind,
    /// Logistic slope: F(x) = 1/(1 + exp(-link_scale x)).
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub link_scale: f64,
    /// Linear link: F(x) = clamp(1/2 + slope x, floor, ceiling).
    #[arg(long, default_value_t = 0.1, value_parser = positive_f64)]
    pub slope: f64,
    #[arg(long, default_value_t = 0.05, value_parser = open_unit)]
    pub floor: f64,
    #[arg(long, default_value_t = 0.95, value_parser = open_unit)]
    pub ceiling: f64,
    /// Table link breakpoints `x:y,x:y,...`.
    #[arg(long)]
    pub table: Option<String>,
    /// Entries are clamped to [eps, 1 - eps].
    #[arg(long, default_value_t = crate::model::DEFAULT_EPS, value_parser = clamp_eps)]
    pub eps: f64,
}

impl ModelArgs {
    pub fn link(&self) -> Result<LinkFunction, String> {
        let link = match self.link {
            LinkKind::Logistic => LinkFunction::logistic(self.link_scale),
            LinkKind::Linear => LinkFunction::LinearClamped {
                slope: self.slope,
                floor: self.floor,
                ceiling: self.ceiling,
            },
            LinkKind::Table => {
                let spec = self.table.as_deref().ok_or("--link table needs --table")?;
                LinkFunction::Table {
                    points: parse_table(spec)?,
                }
            }
        };
        link.validate().map_err(|e| e.to_string())?;
        Ok(link)
    }

    pub fn matrix(&self, n: usize, scale: f64) -> anyhow::Result<ProbMatrix> {
        let link = self.link().map_err(anyhow::Error::msg)?;
        let w = QualityVector::uniform_gaps(n, scale)?;
        Ok(ProbMatrix::build_sst_with_eps(&w, &link, self.eps)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Table,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdsArgs {
    #[arg(long, value_parser = at_least_two)]
    pub n: usize,
    #[arg(long, value_parser = at_least_one)]
    pub m: usize,
    #[arg(long, value_parser = probability)]
    pub p: f64,
    /// 1/gamma_max + 1/gamma_min, at least 4.
    #[arg(long, default_value_t = 4.0, value_parser = k0_value)]
    pub k0: f64,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    pub format: TableFormat,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = at_least_two)]
    pub n: usize,
    #[arg(long, value_parser = at_least_one)]
    pub m: usize,
    #[arg(long, value_parser = probability)]
    pub p: f64,
    #[arg(long, value_parser = positive_f64)]
    pub scale: f64,
    /// Comma-separated subset of `moment,map`.
    #[arg(long, value_delimiter = ',', default_value = "moment")]
    pub estimators: Vec<Estimator>,
    #[arg(long, default_value_t = 1, value_parser = at_least_one_u64)]
    pub trials: u64,
    #[arg(long, default_value = "per-round", value_parser = mask_mode)]
    pub mask_mode: MaskMode,
    /// Moment ranker is not told p.
    #[arg(long, action = ArgAction::SetTrue)]
    pub p_unknown: bool,
    /// Write the observation batch of every trial (`round i j value`, i < j).
    #[arg(long)]
    pub dump_observations: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[arg(long, value_parser = at_least_two)]
    pub n: usize,
    #[arg(long, value_parser = at_least_one)]
    pub m: usize,
    #[arg(long, value_parser = probability)]
    pub p: f64,
    /// `start:stop:count`, evenly spaced and inclusive.
    #[arg(long, conflicts_with = "scale_list")]
    pub scales: Option<String>,
    /// Comma-separated scales.
    #[arg(long, value_delimiter = ',', value_parser = positive_f64)]
    pub scale_list: Option<Vec<f64>>,
    #[arg(long, value_parser = at_least_one_u64)]
    pub trials: u64,
    #[arg(long, value_delimiter = ',', default_value = "moment")]
    pub estimators: Vec<Estimator>,
    #[arg(long, default_value = "per-round", value_parser = mask_mode)]
    pub mask_mode: MaskMode,
    /// Draw one ground-truth permutation for all trials.
    #[arg(long, action = ArgAction::SetTrue)]
    pub fixed_truth: bool,
    #[arg(long, action = ArgAction::SetTrue)]
    pub p_unknown: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConnectivityArgs {
    #[arg(long, value_parser = at_least_two)]
    pub n: usize,
    #[arg(long, value_parser = at_least_one)]
    pub m: usize,
    /// One or more comma-separated offsets.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub c: Vec<f64>,
    #[arg(long, value_parser = at_least_one_u64)]
    pub trials: u64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FailureEventArgs {
    #[arg(long, value_parser = at_least_two, required_unless_present = "matrix_file")]
    pub n: Option<usize>,
    #[arg(long, value_parser = at_least_one)]
    pub m: usize,
    #[arg(long, value_parser = probability)]
    pub p: f64,
    #[arg(long, value_parser = positive_f64, required_unless_present = "matrix_file")]
    pub scale: Option<f64>,
    /// Matrix file (size line, then rows) instead of the uniform-gap family.
    #[arg(long, conflicts_with = "scale")]
    pub matrix_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub i1: usize,
    #[arg(long, default_value_t = 1)]
    pub i2: usize,
    #[arg(long, value_parser = at_least_one_u64)]
    pub trials: u64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CensusArgs {
    #[arg(long, value_parser = at_least_two, required_unless_present = "matrix_file")]
    pub n: Option<usize>,
    #[arg(long, value_parser = at_least_one)]
    pub m: usize,
    #[arg(long, value_parser = probability)]
    pub p: f64,
    #[arg(long, value_parser = positive_f64, required_unless_present = "matrix_file")]
    pub scale: Option<f64>,
    #[arg(long, conflicts_with = "scale")]
    pub matrix_file: Option<PathBuf>,
    #[arg(long, value_parser = at_least_one_u64)]
    pub trials: u64,
    #[arg(long, default_value = "per-round", value_parser = mask_mode)]
    pub mask_mode: MaskMode,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Validated invocation.
#[derive(Debug)]
pub struct CliConfig {
    pub command: Command,
    /// Expanded scale grid for `phase`.
    pub scales: Vec<f64>,
    /// Resolved thread count, 0 = all cores.
    pub threads: usize,
    /// Config echo written to standard error.
    pub echo: String,
}

#[derive(Debug)]
pub enum CliError {
    /// Help or version output; not an error.
    Display(clap::Error),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Display(e) => write!(f, "{e}"),
            Self::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1)"))
    }
}

fn clamp_eps(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 0.5 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1/2)"))
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be a positive finite number"))
    }
}

fn k0_value(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v >= 4.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is below the minimum K0 = 4"))
    }
}

fn at_least(s: &str, min: usize) -> Result<usize, String> {
    let v: usize = s
        .parse()
        .map_err(|_| format!("`{s}` is not a non-negative integer"))?;
    if v >= min {
        Ok(v)
    } else {
        Err(format!("{v} is below the minimum {min}"))
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    at_least(s, 1)
}

fn at_least_two(s: &str) -> Result<usize, String> {
    at_least(s, 2)
}

fn at_least_one_u64(s: &str) -> Result<u64, String> {
    at_least(s, 1).map(|v| v as u64)
}

fn mask_mode(s: &str) -> Result<MaskMode, String> {
    s.parse()
}

/// `x:y,x:y,...` breakpoints.
pub fn parse_table(spec: &str) -> Result<Vec<(f64, f64)>, String> {
    spec.split(',')
        .map(|pt| {
            let (x, y) = pt
                .split_once(':')
                .ok_or_else(|| format!("table breakpoint `{pt}` is not `x:y`"))?;
            let x: f64 = x.trim().parse().map_err(|_| format!("bad table x `{x}`"))?;
            let y: f64 = y.trim().parse().map_err(|_| format!("bad table y `{y}`"))?;
            Ok((x, y))
        })
        .collect()
}

/// Expands `start:stop:count` into `count` evenly spaced values, both ends included.
pub fn parse_scale_range(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, k] = parts[..] else {
        return Err(format!("scale range `{spec}` is not `start:stop:count`"));
    };
    let a = positive_f64(a)?;
    let b = positive_f64(b)?;
    let k = at_least(k, 1)?;
    if k == 1 {
        return if a == b {
            Ok(vec![a])
        } else {
            Err(format!("count 1 needs start = stop, got {a}:{b}"))
        };
    }
    if b <= a {
        return Err(format!("scale range needs start < stop, got {a}:{b}"));
    }
    let step = (b - a) / (k - 1) as f64;
    Ok((0..k)
        .map(|i| if i + 1 == k { b } else { a + step * i as f64 })
        .collect())
}

/// Turns config-file lines into flags for subcommand `sub`, checked against
/// the subcommand's flag set. Boolean flags take `true`/`false`.
fn config_flags(sub: &str, text: &str, path: &Path) -> Result<Vec<OsString>, CliError> {
    let cmd = Cli::command();
    let sub_cmd = cmd
        .find_subcommand(sub)
        .ok_or_else(|| usage(format!("unknown subcommand `{sub}`")))?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            usage(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                idx + 1
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key == "config" {
            return Err(usage(format!(
                "{}:{}: nested config",
                path.display(),
                idx + 1
            )));
        }
        let arg = sub_cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(key))
            .ok_or_else(|| {
                usage(format!(
                    "{}:{}: unknown key `{key}` for `{sub}`",
                    path.display(),
                    idx + 1
                ))
            })?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                _ => {
                    return Err(usage(format!(
                        "{}:{}: `{key}` takes true or false",
                        path.display(),
                        idx + 1
                    )))
                }
            }
        } else {
            out.push(format!("--{key}={value}").into());
        }
    }
    Ok(out)
}

/// Splices the flags of a `--config` file in front of the command-line flags
/// so that the latter win.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut iter = argv.into_iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            let v = iter.next().ok_or_else(|| usage("--config needs a file"))?;
            path = Some(PathBuf::from(v));
        } else if let Some(v) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(v));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    // rest[0] is the program name, rest[1] the subcommand
    let sub = rest
        .get(1)
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| usage("--config needs a subcommand"))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let flags = config_flags(&sub, &text, &path)?;
    let mut out = rest[..2].to_vec();
    out.extend(flags);
    out.extend_from_slice(&rest[2..]);
    Ok(out)
}

fn resolve_threads(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{THREADS_ENV}=`{v}` is not a thread count"))),
        _ => Ok(0),
    }
}

fn check_map(estimators: &[Estimator], n: usize) -> Result<(), CliError> {
    if estimators.contains(&Estimator::Map) && n > MAX_MAP_N {
        return Err(usage(format!(
            "--estimators map needs --n <= {MAX_MAP_N}, got {n}"
        )));
    }
    if estimators.is_empty() {
        return Err(usage("--estimators is empty"));
    }
    Ok(())
}

fn check_pair(i1: usize, i2: usize, n: Option<usize>) -> Result<(), CliError> {
    if i1 == i2 {
        return Err(usage("--i1 and --i2 must differ"));
    }
    if let Some(n) = n {
        if i1.max(i2) >= n {
            return Err(usage(format!("--i1/--i2 must be below --n = {n}")));
        }
    }
    Ok(())
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Thresholds(a) => &a.common,
        Command::Simulate(a) => &a.common,
        Command::Phase(a) => &a.common,
        Command::Connectivity(a) => &a.common,
        Command::FailureEvent(a) => &a.common,
        Command::Census(a) => &a.common,
    }
}

/// Parses and validates `argv` (program name first).
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = expand_config(argv.into_iter().map(Into::into).collect())?;
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Display(e)
        }
        _ => CliError::Usage(e.to_string().trim_end().to_string()),
    })?;
    let mut scales = Vec::new();
    match &cli.command {
        Command::Thresholds(_) | Command::Connectivity(_) => {}
        Command::Simulate(a) => {
            check_map(&a.estimators, a.n)?;
            a.model.link().map_err(usage)?;
        }
        Command::Phase(a) => {
            check_map(&a.estimators, a.n)?;
            a.model.link().map_err(usage)?;
            scales = match (&a.scales, &a.scale_list) {
                (Some(spec), None) => parse_scale_range(spec).map_err(usage)?,
                (None, Some(list)) => list.clone(),
                _ => return Err(usage("phase needs --scales or --scale-list")),
            };
            if scales.windows(2).any(|w| w[0] >= w[1]) {
                return Err(usage("scale grid must be strictly increasing"));
            }
        }
        Command::FailureEvent(a) => {
            check_pair(a.i1, a.i2, a.n)?;
            a.model.link().map_err(usage)?;
        }
        Command::Census(a) => {
            a.model.link().map_err(usage)?;
        }
    }
    let threads = resolve_threads(common(&cli.command).threads)?;
    let echo = format!("{:?}", cli.command);
    Ok(CliConfig {
        command: cli.command,
        scales,
        threads,
        echo,
    })
}

fn load_matrix(path: &Path) -> anyhow::Result<ProbMatrix> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading matrix file {}", path.display()))?;
    ProbMatrix::from_text(&text).with_context(|| format!("parsing matrix file {}", path.display()))
}

fn simulate(a: &SimulateArgs) -> anyhow::Result<String> {
    let mut cfg = SweepConfig::new(a.n, a.m, a.p, vec![a.scale], a.trials);
    cfg.link = a.model.link().map_err(anyhow::Error::msg)?;
    cfg.eps = a.model.eps;
    cfg.estimators = a.estimators.clone();
    cfg.master_seed = a.seed.seed;
    cfg.mask_mode = a.mask_mode;
    cfg.p_known = !a.p_unknown;
    cfg.validate()?;
    let mut out = format!("{}\n", report::RANKING_HEADER);
    let mut dump = String::new();
    for t in 0..a.trials {
        let outcome = run_trial(&cfg, 0, a.scale, t)?;
        for r in &outcome.records {
            out.push_str(&report::ranking_row(r, a.n, a.m, a.p, a.scale));
            out.push('\n');
        }
        if a.dump_observations.is_some() {
            let shuffled = apply_permutation(&cfg.matrix(a.scale)?, &outcome.pi_star)?;
            let design =
                DesignParams::new(a.p, a.m, a.mask_mode, trial_seed(cfg.master_seed, 0, t))?;
            dump.push_str(&format!("# trial {t}\n"));
            dump.push_str(&sample_batch(&shuffled, &design).dump());
        }
    }
    if let Some(path) = &a.dump_observations {
        std::fs::write(path, dump).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(out)
}

fn phase(a: &PhaseArgs, scales: &[f64]) -> anyhow::Result<String> {
    let mut cfg = SweepConfig::new(a.n, a.m, a.p, scales.to_vec(), a.trials);
    cfg.link = a.model.link().map_err(anyhow::Error::msg)?;
    cfg.eps = a.model.eps;
    cfg.estimators = a.estimators.clone();
    cfg.master_seed = a.seed.seed;
    cfg.mask_mode = a.mask_mode;
    cfg.truth_mode = if a.fixed_truth {
        TruthMode::Fixed
    } else {
        TruthMode::Uniform
    };
    cfg.p_known = !a.p_unknown;
    Ok(report::phase_csv(&phase_sweep(&cfg)?))
}

fn failure_event(a: &FailureEventArgs) -> anyhow::Result<String> {
    let mat = match (&a.matrix_file, a.n, a.scale) {
        (Some(path), _, _) => load_matrix(path)?,
        (None, Some(n), Some(scale)) => a.model.matrix(n, scale)?,
        _ => bail!("failure-event needs --n and --scale, or --matrix-file"),
    };
    if a.i1.max(a.i2) >= mat.n() {
        bail!("--i1/--i2 must be below n = {}", mat.n());
    }
    let r = failure_event_mc(&mat, a.p, a.m, a.i1, a.i2, a.trials, a.seed.seed)?;
    Ok(format!(
        "{}\n{}\n",
        report::FAILURE_HEADER,
        report::failure_row(&r)
    ))
}

fn census(a: &CensusArgs) -> anyhow::Result<String> {
    let mat = match (&a.matrix_file, a.n, a.scale) {
        (Some(path), _, _) => load_matrix(path)?,
        (None, Some(n), Some(scale)) => a.model.matrix(n, scale)?,
        _ => bail!("census needs --n and --scale, or --matrix-file"),
    };
    gap_stats(&mat).context("census needs rows in strength order")?;
    let r = adjacent_failure_census(&mat, a.p, a.m, a.trials, a.seed.seed, a.mask_mode)?;
    Ok(format!(
        "{}\n{}\n",
        report::CENSUS_HEADER,
        report::census_row(&r, a.scale)
    ))
}

fn dispatch(cfg: &CliConfig) -> anyhow::Result<String> {
    match &cfg.command {
        Command::Thresholds(a) => {
            let t = bounds::thresholds(a.n, a.m, a.p, a.k0)?;
            Ok(match a.format {
                TableFormat::Table => report::thresholds_table(a.n, a.m, a.p, a.k0, &t),
                TableFormat::Csv => format!(
                    "{}\n{}\n",
                    report::THRESHOLDS_HEADER,
                    report::thresholds_row(a.n, a.m, a.p, a.k0, &t)
                ),
            })
        }
        Command::Simulate(a) => simulate(a),
        Command::Phase(a) => phase(a, &cfg.scales),
        Command::Connectivity(a) => {
            let mut out = format!("{}\n", report::CONNECTIVITY_HEADER);
            for &c in &a.c {
                let r = connectivity_experiment(a.n, a.m, c, a.trials, a.seed.seed)?;
                out.push_str(&report::connectivity_row(&r));
                out.push('\n');
            }
            Ok(out)
        }
        Command::FailureEvent(a) => failure_event(a),
        Command::Census(a) => census(a),
    }
}

/// Runs a validated invocation and writes its output.
pub fn run(cfg: &CliConfig) -> anyhow::Result<()> {
    eprintln!("config: {}", cfg.echo);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .context("building thread pool")?;
    let text = pool.install(|| dispatch(cfg))?;
    let out = common(&cfg.command).out.as_deref();
    report::emit(&text, out).with_context(|| match out {
        Some(p) => format!("writing {}", p.display()),
        None => "writing standard output".into(),
    })
}

/// Parses, runs, and maps the outcome to a process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(cfg) => cfg,
        Err(CliError::Display(e)) => {
            let _ = e.print();
            return 0;
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("{msg}");
            return 2;
        }
    };
    match run(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
