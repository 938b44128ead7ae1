//! Command-line front end: `curve`, `safety`, `sequential`, `pvalue-demo`.
//!
//! Settings resolve as command-line flag, then `--config` file (JSON), then
//! built-in default. Exit codes: 0 success, 2 usage or configuration error,
//! 3 numerical failure or a failed check.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::Method;
use crate::mc::DEFAULT_REPS;

pub use commands::{cmd_curve, cmd_pvalue_demo, cmd_safety, cmd_sequential};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

// ---------------------------------------------------------------------------
// Flags
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "fbf-evalue",
    version,
    about = "Fractional Bayes factor e-values for the one-sample t-test"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate ln E[E] over a grid of standardized effects.
    Curve(SimArgs),
    /// Check E_H0[E] <= 1 for each method at delta = 0.
    Safety(SafetyArgs),
    /// Recompute the FBF after each batch of stored sufficient statistics.
    Sequential(SequentialArgs),
    /// Truncated means of 1/p under H0 against the analytic 1 + ln M.
    PvalueDemo(PvalueArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimand {
    /// ln E[E]
    LogOfMean,
    /// E[ln E]
    MeanOfLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnsafeMethod {
    InverseP,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON file with default settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Observations per simulated data set.
    #[arg(long)]
    pub n: Option<u64>,
    /// Comma list (0,0.5,1) or range lo:hi:step.
    #[arg(long)]
    pub deltas: Option<String>,
    /// FBF training fractions, comma separated.
    #[arg(long)]
    pub fractions: Option<String>,
    /// Cauchy prior scales for the Haar Bayes factor, comma separated;
    /// "none" drops the Haar baseline.
    #[arg(long)]
    pub haar_scale: Option<String>,
    /// Also estimate the reciprocal p-value.
    #[arg(long)]
    pub inverse_p: bool,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub estimand: Option<Estimand>,
    /// Worker threads (0 = all cores). Output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SafetyArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Methods expected to violate E_H0[E] <= 1; their FAIL does not
    /// change the exit code. Implies including the method.
    #[arg(long, value_enum)]
    pub expect_unsafe: Vec<UnsafeMethod>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SequentialArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// One JSON object per line with keys n, sum, sum_sq.
    #[arg(long)]
    pub batches: PathBuf,
    /// Training fraction b; defaults to the minimal fraction 2/n-total.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Expected combined sample size; checked against the batches.
    #[arg(long)]
    pub n_total: Option<u64>,
    /// Raw observations in batch order (one number per line), used to
    /// verify every prefix against a full-data recomputation.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PvalueArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Truncation caps M > 1, comma separated.
    #[arg(long)]
    pub caps: Option<String>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

// ---------------------------------------------------------------------------
// Resolved configuration
// ---------------------------------------------------------------------------

/// Values a `--config` file may set. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<u64>,
    pub deltas: Option<Vec<f64>>,
    pub fractions: Option<Vec<f64>>,
    pub haar_scales: Option<Vec<f64>>,
    pub inverse_p: Option<bool>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub estimand: Option<Estimand>,
    pub threads: Option<usize>,
    pub caps: Option<Vec<f64>>,
}

pub const DEFAULT_N: u64 = 20;
pub const DEFAULT_SEED: u64 = 20_210_101;
pub const DEFAULT_FRACTIONS: [f64; 4] = [0.1, 0.3, 0.5, 0.8];
pub const DEFAULT_HAAR_SCALE: f64 = 1.0;
pub const DEFAULT_CAPS: [f64; 3] = [10.0, 100.0, 1000.0];

/// Fully resolved settings for a simulation command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: u64,
    pub deltas: Vec<f64>,
    pub fractions: Vec<f64>,
    pub haar_scales: Vec<f64>,
    pub inverse_p: bool,
    pub reps: u64,
    pub seed: u64,
    pub format: Format,
    pub estimand: Estimand,
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn methods(&self) -> Vec<Method> {
        let mut methods: Vec<Method> = self.fractions.iter().map(|&b| Method::Fbf { b }).collect();
        methods.extend(self.haar_scales.iter().map(|&r| Method::Haar { r }));
        if self.inverse_p {
            methods.push(Method::InverseP);
        }
        methods
    }

    pub fn mc_config(&self) -> crate::mc::MCConfig {
        crate::mc::MCConfig {
            n: self.n,
            reps: self.reps,
            seed: self.seed,
            deltas: self.deltas.clone(),
            methods: self.methods(),
        }
    }
}

pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

fn parse_f64(s: &str, what: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{what}: cannot parse {s:?} as a number")))?;
    if !v.is_finite() {
        return Err(CliError::Usage(format!("{what}: {s:?} is not finite")));
    }
    Ok(v)
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let items: Vec<f64> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_f64(p, what))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(CliError::Usage(format!("{what}: empty list")));
    }
    Ok(items)
}

/// Parses `lo:hi:step` or a comma list into an ascending grid.
pub fn parse_deltas(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [_] => parse_list(s, "--deltas")?,
        [lo, hi, step] => {
            let (lo, hi, step) = (
                parse_f64(lo, "--deltas")?,
                parse_f64(hi, "--deltas")?,
                parse_f64(step, "--deltas")?,
            );
            if step.is_nan() || step <= 0.0 || hi < lo {
                return Err(CliError::Usage(format!(
                    "--deltas: need lo <= hi and step > 0, got {s:?}"
                )));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            if count > 10_000 {
                return Err(CliError::Usage("--deltas: grid has too many points".into()));
            }
            (0..count)
                .map(|i| {
                    let v = lo + i as f64 * step;
                    // trim representation noise such as 0.30000000000000004
                    format!("{v:.12}").parse::<f64>().unwrap_or(v)
                })
                .collect()
        }
        _ => {
            return Err(CliError::Usage(format!(
                "--deltas: expected a comma list or lo:hi:step, got {s:?}"
            )))
        }
    };
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::Usage("--deltas must be ascending".into()));
    }
    Ok(grid)
}

fn parse_haar_scales(s: &str) -> Result<Vec<f64>, CliError> {
    if s.trim().eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    parse_list(s, "--haar-scale")
}

/// Merges flags, config file and defaults for `curve` and `safety`.
pub fn resolve_sim(args: &SimArgs, default_deltas: &[f64]) -> Result<RunConfig, CliError> {
    let file = load_file_config(args.common.config.as_deref())?;
    let deltas = match &args.deltas {
        Some(s) => parse_deltas(s)?,
        None => file
            .deltas
            .clone()
            .unwrap_or_else(|| default_deltas.to_vec()),
    };
    let fractions = match &args.fractions {
        Some(s) => parse_list(s, "--fractions")?,
        None => file
            .fractions
            .clone()
            .unwrap_or_else(|| DEFAULT_FRACTIONS.to_vec()),
    };
    let haar_scales = match &args.haar_scale {
        Some(s) => parse_haar_scales(s)?,
        None => file
            .haar_scales
            .clone()
            .unwrap_or_else(|| vec![DEFAULT_HAAR_SCALE]),
    };
    Ok(RunConfig {
        n: args.n.or(file.n).unwrap_or(DEFAULT_N),
        deltas,
        fractions,
        haar_scales,
        inverse_p: args.inverse_p || file.inverse_p.unwrap_or(false),
        reps: args.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        format: args.common.format.or(file.format).unwrap_or(Format::Csv),
        estimand: args
            .estimand
            .or(file.estimand)
            .unwrap_or(Estimand::LogOfMean),
        threads: args.threads.or(file.threads).unwrap_or(0),
        out: args.common.out.clone(),
    })
}

/// Default curve grid: δ from 0 to 1.5 in steps of 0.1.
pub fn default_deltas() -> Vec<f64> {
    parse_deltas("0:1.5:0.1").expect("static grid")
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Where a command writes its table.
pub(crate) fn open_output<'a>(
    out: Option<&Path>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, CliError> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(CliError::io(format!("cannot create {}", path.display())))?;
            Ok(Box::new(std::io::BufWriter::new(file)))
        }
        None => Ok(Box::new(stdout)),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
            } else {
                let _ = stdout.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Curve(a) => cmd_curve(a, stdout, stderr),
        Command::Safety(a) => cmd_safety(a, stdout, stderr),
        Command::Sequential(a) => cmd_sequential(a, stdout, stderr),
        Command::PvalueDemo(a) => cmd_pvalue_demo(a, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
