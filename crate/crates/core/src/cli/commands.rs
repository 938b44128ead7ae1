use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::output::{
    curve_rows, write_csv_with_header, write_json, CurveRow, Metadata, PvalueRow, SafetyRow,
    SequentialRow, CURVE_HEADER,
};
use super::{
    default_deltas, load_file_config, open_output, parse_list, resolve_sim, CliError, Format,
    PvalueArgs, RunConfig, SafetyArgs, SequentialArgs, SimArgs, UnsafeMethod, DEFAULT_CAPS,
    DEFAULT_N, DEFAULT_SEED, EXIT_NUMERIC, EXIT_OK,
};
use crate::evidence::{fbf_log_evidence, Fraction, Method};
use crate::mc::{self, EvidenceCurve, McError, DEFAULT_REPS};
use crate::seqstats::SufficientStats;

/// Tolerance for agreement between batched and full-data recomputation.
pub const COHERENCE_TOL: f64 = 1e-10;
/// Safety passes when `ln E[E] ≤ SAFETY_SE_MULTIPLE · std_error`.
pub const SAFETY_SE_MULTIPLE: f64 = 3.0;

fn mc_error(e: McError) -> CliError {
    match e {
        McError::Config(msg) => CliError::Usage(msg),
        other => CliError::Numeric(other.to_string()),
    }
}

fn with_threads<T: Send>(
    threads: usize,
    job: impl FnOnce() -> Result<T, McError> + Send,
) -> Result<T, CliError> {
    if threads == 0 {
        return job().map_err(mc_error);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    pool.install(job).map_err(mc_error)
}

fn run_sweep(cfg: &RunConfig) -> Result<EvidenceCurve, CliError> {
    let mc_cfg = cfg.mc_config();
    mc_cfg.validate().map_err(mc_error)?;
    with_threads(cfg.threads, || mc::sweep(&mc_cfg))
}

fn emit<C: Serialize, R: Serialize, S: Serialize>(
    format: Format,
    out_path: Option<&Path>,
    header: &str,
    metadata: Metadata<'_, C>,
    rows: &[R],
    summary: Option<S>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let mut out = open_output(out_path, stdout)?;
    match format {
        Format::Csv => write_csv_with_header(rows, header, &mut *out)?,
        Format::Json => write_json(metadata, rows, summary, &mut *out)?,
    }
    out.flush().map_err(CliError::io("failed to write output"))
}

fn report_failures(curve: &EvidenceCurve, stderr: &mut dyn Write) -> i32 {
    for f in &curve.failures {
        let _ = writeln!(
            stderr,
            "error: delta={} {}: {}",
            f.delta, f.method, f.message
        );
    }
    if curve.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_NUMERIC
    }
}

// ---------------------------------------------------------------------------
// curve
// ---------------------------------------------------------------------------

pub fn cmd_curve(
    args: &SimArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let cfg = resolve_sim(args, &default_deltas())?;
    let curve = run_sweep(&cfg)?;
    let rows: Vec<CurveRow> = curve_rows(&curve, cfg.estimand);
    let mut metadata = Metadata::new("curve", &cfg);
    metadata.estimand = Some(cfg.estimand);
    metadata.failures = &curve.failures;
    emit(
        cfg.format,
        cfg.out.as_deref(),
        CURVE_HEADER,
        metadata,
        &rows,
        None::<()>,
        stdout,
    )?;
    Ok(report_failures(&curve, stderr))
}

// ---------------------------------------------------------------------------
// safety
// ---------------------------------------------------------------------------

pub fn cmd_safety(
    args: &SafetyArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut cfg = resolve_sim(&args.sim, &[0.0])?;
    if cfg.deltas != [0.0] {
        let _ = writeln!(stderr, "note: safety is evaluated at delta = 0 only");
    }
    cfg.deltas = vec![0.0];
    let inverse_p_expected = args.expect_unsafe.contains(&UnsafeMethod::InverseP);
    cfg.inverse_p |= inverse_p_expected;

    let curve = run_sweep(&cfg)?;
    let mut all_ok = true;
    let rows: Vec<SafetyRow> = curve
        .points
        .iter()
        .map(|p| {
            let threshold = SAFETY_SE_MULTIPLE * p.std_error;
            let pass = p.log_expected_evidence <= threshold;
            let expected_unsafe = p.method == Method::InverseP && inverse_p_expected;
            if !pass && !expected_unsafe {
                all_ok = false;
            }
            let verdict = if pass { "PASS" } else { "FAIL" };
            let _ = writeln!(
                stderr,
                "{verdict} {}: ln E[E] = {:.6} (threshold {:.6}){}",
                p.method,
                p.log_expected_evidence,
                threshold,
                if expected_unsafe {
                    " [expected unsafe]"
                } else {
                    ""
                }
            );
            SafetyRow {
                method: p.method.label().into(),
                param: p.method.param(),
                log_expected_evidence: p.log_expected_evidence,
                std_error: p.std_error,
                threshold,
                verdict: verdict.into(),
                expected_unsafe,
            }
        })
        .collect();

    let mut metadata = Metadata::new("safety", &cfg);
    metadata.failures = &curve.failures;
    emit(
        cfg.format,
        cfg.out.as_deref(),
        "method,param,log_expected_evidence,std_error,threshold,verdict,expected_unsafe",
        metadata,
        &rows,
        None::<()>,
        stdout,
    )?;
    let code = report_failures(&curve, stderr);
    if code != EXIT_OK || !all_ok {
        return Ok(EXIT_NUMERIC);
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// sequential
// ---------------------------------------------------------------------------

/// Reads one `{"n", "sum", "sum_sq"}` record per non-blank line.
pub fn read_batches(text: &str) -> Result<Vec<SufficientStats>, CliError> {
    let mut batches = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = batches.len();
        let stats: SufficientStats = serde_json::from_str(line).map_err(|e| {
            CliError::Usage(format!("batch record {record} (line {}): {e}", line_no + 1))
        })?;
        batches.push(stats);
    }
    if batches.is_empty() {
        return Err(CliError::Usage("batch file contains no records".into()));
    }
    Ok(batches)
}

fn read_raw_data(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "{} line {}: not a finite number",
                        path.display(),
                        i + 1
                    ))
                })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct SequentialSettings {
    batches: String,
    b: f64,
    n_total: u64,
    data: Option<String>,
}

#[derive(Debug, Serialize)]
struct SequentialSummary {
    final_log_evidence: f64,
    max_discrepancy: Option<f64>,
}

fn fbf_for(stats: &SufficientStats, b: f64) -> Option<(f64, f64)> {
    let ts = stats.t_statistic().ok()?;
    let fraction = Fraction::new(b, stats.n()).ok()?;
    let ev = fbf_log_evidence(&ts, fraction).ok()?;
    Some((ts.t, ev.log_e))
}

pub fn cmd_sequential(
    args: &SequentialArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let file = load_file_config(args.common.config.as_deref())?;
    let format = args.common.format.or(file.format).unwrap_or(Format::Csv);
    let text = std::fs::read_to_string(&args.batches)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.batches.display())))?;
    let batches = read_batches(&text)?;

    let prefixes: Vec<SufficientStats> = batches
        .iter()
        .scan(None::<SufficientStats>, |acc, b| {
            let next = match acc {
                Some(a) => a.combine(b),
                None => *b,
            };
            *acc = Some(next);
            Some(next)
        })
        .collect();
    let combined = *prefixes.last().expect("non-empty");
    let n_total = combined.n();
    if let Some(expected) = args.n_total {
        if expected != n_total {
            return Err(CliError::Usage(format!(
                "--n-total {expected} does not match the combined batch size {n_total}"
            )));
        }
    }
    if n_total < 3 {
        return Err(CliError::Usage(format!(
            "combined sample size {n_total} is below 3"
        )));
    }
    let b = args.fraction.unwrap_or(2.0 / n_total as f64);
    Fraction::new(b, n_total).map_err(|e| CliError::Usage(e.to_string()))?;

    let data = match &args.data {
        Some(path) => {
            let data = read_raw_data(path)?;
            if data.len() as u64 != n_total {
                return Err(CliError::Usage(format!(
                    "{} has {} values but the batches total {n_total}",
                    path.display(),
                    data.len()
                )));
            }
            Some(data)
        }
        None => None,
    };

    let mut rows = Vec::with_capacity(prefixes.len());
    let mut max_discrepancy: Option<f64> = None;
    for (i, prefix) in prefixes.iter().enumerate() {
        let batched = fbf_for(prefix, b);
        let full = data.as_ref().and_then(|d| {
            let stats = SufficientStats::from_samples(&d[..prefix.n() as usize]).ok()?;
            fbf_for(&stats, b)
        });
        let discrepancy = match (batched, full) {
            (Some((_, x)), Some((_, y))) => Some((x - y).abs()),
            _ => None,
        };
        if let Some(d) = discrepancy {
            max_discrepancy = Some(max_discrepancy.map_or(d, |m: f64| m.max(d)));
        }
        rows.push(SequentialRow {
            batch: i,
            n: prefix.n(),
            sum: prefix.sum(),
            sum_sq: prefix.sum_sq(),
            b: batched.map(|_| b),
            t: batched.map(|(t, _)| t),
            log_evidence: batched.map(|(_, e)| e),
            full_data_log_evidence: full.map(|(_, e)| e),
            discrepancy,
        });
    }

    let Some((_, final_log_evidence)) = fbf_for(&combined, b) else {
        return Err(CliError::Numeric(
            "combined data have degenerate variance; the t statistic is undefined".into(),
        ));
    };

    let settings = SequentialSettings {
        batches: args.batches.display().to_string(),
        b,
        n_total,
        data: args.data.as_ref().map(|p| p.display().to_string()),
    };
    let summary = SequentialSummary {
        final_log_evidence,
        max_discrepancy,
    };
    emit(
        format,
        args.common.out.as_deref(),
        "batch,n,sum,sum_sq,b,t,log_evidence,full_data_log_evidence,discrepancy",
        Metadata::new("sequential", &settings),
        &rows,
        Some(summary),
        stdout,
    )?;

    let _ = writeln!(
        stderr,
        "final FBF log evidence (b = {b}): {final_log_evidence}"
    );
    match (data.is_some(), max_discrepancy) {
        (false, _) => {
            let _ = writeln!(stderr, "full-data check skipped (no --data)");
        }
        (true, Some(d)) if d > COHERENCE_TOL => {
            let _ = writeln!(stderr, "max discrepancy {d:e} exceeds {COHERENCE_TOL:e}");
            return Ok(EXIT_NUMERIC);
        }
        (true, d) => {
            let _ = writeln!(
                stderr,
                "max discrepancy vs full data: {:e}",
                d.unwrap_or(0.0)
            );
        }
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// pvalue-demo
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct PvalueSettings {
    caps: Vec<f64>,
    n: u64,
    reps: u64,
    seed: u64,
}

pub fn cmd_pvalue_demo(
    args: &PvalueArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let file = load_file_config(args.common.config.as_deref())?;
    let caps = match &args.caps {
        Some(s) => parse_list(s, "--caps")?,
        None => file.caps.clone().unwrap_or_else(|| DEFAULT_CAPS.to_vec()),
    };
    if let Some(m) = caps.iter().find(|&&m| m.is_nan() || m <= 1.0) {
        return Err(CliError::Usage(format!("--caps: M = {m} must exceed 1")));
    }
    let settings = PvalueSettings {
        caps,
        n: args.n.or(file.n).unwrap_or(DEFAULT_N),
        reps: args.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
    };
    let format = args.common.format.or(file.format).unwrap_or(Format::Csv);
    let threads = args.threads.or(file.threads).unwrap_or(0);

    let means = with_threads(threads, || {
        mc::truncated_inverse_p_means(&settings.caps, settings.reps, settings.seed, settings.n)
    })?;
    let rows: Vec<PvalueRow> = means
        .iter()
        .map(|m| PvalueRow {
            cap: m.cap,
            empirical_mean: m.value,
            analytic: m.analytic,
            std_error: m.std_error,
            z: (m.value - m.analytic) / m.std_error,
            reps: m.reps,
            n: settings.n,
            seed: settings.seed,
        })
        .collect();
    for r in &rows {
        let _ = writeln!(
            stderr,
            "M = {}: mean min(1/p, M) = {:.4} ± {:.4}, 1 + ln M = {:.4}",
            r.cap, r.empirical_mean, r.std_error, r.analytic
        );
    }
    emit(
        format,
        args.common.out.as_deref(),
        "cap,empirical_mean,analytic,std_error,z,reps,n,seed",
        Metadata::new("pvalue-demo", &settings),
        &rows,
        None::<()>,
        stdout,
    )?;
    Ok(EXIT_OK)
}
