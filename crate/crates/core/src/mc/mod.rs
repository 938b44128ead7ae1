//! Monte Carlo estimation of the log expected evidence `ln E_δ[E]`.
//!
//! Each (δ, method) cell draws its own replications from a dedicated random
//! substream (see [`rng`]), split into fixed-size shards. Shards run in
//! parallel and are reduced in shard order, so the output depends only on
//! the configuration and never on the number of worker threads.

mod estimator;
pub mod rng;

pub use estimator::{log_mean_exp, Estimate, EvidenceAccumulator, LogSumExp};
pub use rng::{substream, CellKey, NormalStream};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{Evaluator, EvidenceError, Method, TStat};
use crate::seqstats::{StatsAccumulator, StatsError};
use crate::specfun;

/// Replications per shard; shard `k` of a cell covers reps `[k·S, (k+1)·S)`.
pub const SHARD_SIZE: u64 = 1 << 16;
pub const MIN_REPS: u64 = 100;
pub const DEFAULT_REPS: u64 = 1_000_000;
const MAX_RETRIES: u32 = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid Monte Carlo configuration: {0}")]
    Config(String),
    #[error("{retries} consecutive degenerate samples for n = {n}, delta = {delta}")]
    RetriesExhausted { n: u64, delta: f64, retries: u32 },
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("failed to build thread pool: {0}")]
    ThreadPool(String),
}

// ---------------------------------------------------------------------------
// Configuration and results
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub n: u64,
    pub reps: u64,
    pub seed: u64,
    pub deltas: Vec<f64>,
    pub methods: Vec<Method>,
}

impl MCConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.n < 3 {
            return Err(McError::Config(format!(
                "n = {} must be at least 3",
                self.n
            )));
        }
        if self.reps < MIN_REPS {
            return Err(McError::Config(format!(
                "reps = {} must be at least {MIN_REPS}",
                self.reps
            )));
        }
        if self.reps.div_ceil(SHARD_SIZE) as usize >= rng::MAX_SHARD {
            return Err(McError::Config(format!(
                "reps = {} is too large",
                self.reps
            )));
        }
        if self.deltas.is_empty() || self.methods.is_empty() {
            return Err(McError::Config(
                "need at least one delta and one method".into(),
            ));
        }
        if self.deltas.len() >= rng::MAX_DELTA_INDEX || self.methods.len() >= rng::MAX_METHOD_INDEX
        {
            return Err(McError::Config("grid is too large".into()));
        }
        if let Some(d) = self.deltas.iter().find(|d| !d.is_finite()) {
            return Err(McError::Config(format!("delta {d} is not finite")));
        }
        if self.deltas.windows(2).any(|w| w[0] > w[1]) {
            return Err(McError::Config("deltas must be sorted ascending".into()));
        }
        for &m in &self.methods {
            Evaluator::new(m, self.n).map_err(|e| McError::Config(format!("{m}: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub delta: f64,
    pub method: Method,
    pub log_expected_evidence: f64,
    pub std_error: f64,
    pub mean_log_evidence: f64,
    pub mean_log_std_error: f64,
    pub reps: u64,
    pub n: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub delta: f64,
    pub method: Method,
    pub message: String,
}

/// Estimated `ln E[E]` over the (δ × method) grid, δ-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceCurve {
    pub n: u64,
    pub reps: u64,
    pub seed: u64,
    pub points: Vec<CurvePoint>,
    pub failures: Vec<CellFailure>,
}

impl EvidenceCurve {
    pub fn get(&self, delta: f64, method: Method) -> Option<&CurvePoint> {
        self.points
            .iter()
            .find(|p| p.delta == delta && p.method == method)
    }

    /// Points for one method in ascending δ.
    pub fn series(&self, method: Method) -> Vec<&CurvePoint> {
        self.points.iter().filter(|p| p.method == method).collect()
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Draws `n` i.i.d. `Normal(delta, 1)` observations and returns their t
/// statistic, redrawing the whole sample if it is degenerate. The second
/// value counts redraws.
pub fn simulate_t<R: RngCore>(
    n: u64,
    delta: f64,
    stream: &mut NormalStream<R>,
) -> Result<(TStat, u32), McError> {
    if n < 2 {
        return Err(McError::Config(format!("n = {n} must be at least 2")));
    }
    for retries in 0..MAX_RETRIES {
        let mut acc = StatsAccumulator::default();
        for _ in 0..n {
            acc.push(delta + stream.standard_normal());
        }
        match acc.finish()?.t_statistic() {
            Ok(ts) => return Ok((ts, retries)),
            Err(StatsError::DegenerateVariance { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(McError::RetriesExhausted {
        n,
        delta,
        retries: MAX_RETRIES,
    })
}

fn shard_count(reps: u64) -> usize {
    reps.div_ceil(SHARD_SIZE) as usize
}

fn shard_len(reps: u64, shard: usize) -> u64 {
    let start = shard as u64 * SHARD_SIZE;
    SHARD_SIZE.min(reps - start)
}

#[allow(clippy::too_many_arguments)]
fn run_shard<F: FnMut(f64)>(
    evaluator: &Evaluator,
    n: u64,
    delta: f64,
    reps: u64,
    seed: u64,
    cell: CellKey,
    shard: usize,
    mut sink: F,
) -> Result<u64, McError> {
    let mut stream = NormalStream::new(substream(seed, cell, shard));
    let mut retries = 0u64;
    for _ in 0..shard_len(reps, shard) {
        let (ts, r) = simulate_t(n, delta, &mut stream)?;
        retries += r as u64;
        sink(evaluator.log_evidence(ts.t)?);
    }
    Ok(retries)
}

fn accumulate_shard(
    evaluator: &Evaluator,
    n: u64,
    delta: f64,
    reps: u64,
    seed: u64,
    cell: CellKey,
    shard: usize,
) -> Result<EvidenceAccumulator, McError> {
    let mut acc = EvidenceAccumulator::default();
    let retries = run_shard(evaluator, n, delta, reps, seed, cell, shard, |x| {
        acc.push(x)
    })?;
    acc.retries = retries;
    Ok(acc)
}

fn reduce_shards(
    shards: impl IntoIterator<Item = Result<EvidenceAccumulator, McError>>,
) -> Result<Estimate, McError> {
    let mut total = EvidenceAccumulator::default();
    for shard in shards {
        total.merge(&shard?);
    }
    Ok(total.estimate())
}

/// Estimates one cell of the sweep grid from its own substreams.
pub fn estimate_cell(
    method: Method,
    n: u64,
    delta: f64,
    reps: u64,
    seed: u64,
    cell: CellKey,
) -> Result<Estimate, McError> {
    if reps == 0 {
        return Err(McError::Config("reps must be positive".into()));
    }
    let evaluator = Evaluator::new(method, n)?;
    let shards: Vec<_> = (0..shard_count(reps))
        .into_par_iter()
        .map(|s| accumulate_shard(&evaluator, n, delta, reps, seed, cell, s))
        .collect();
    reduce_shards(shards)
}

/// `ln E_δ[E]` for a single method, estimated from `reps` simulated data sets.
///
/// Uses the substreams of grid cell (0, 0). Because shards are prefixes of
/// one another's streams, a run with fewer reps sees exactly the first
/// replications of a longer run with the same seed.
pub fn log_expected_evidence(
    method: Method,
    n: u64,
    delta: f64,
    reps: u64,
    seed: u64,
) -> Result<Estimate, McError> {
    estimate_cell(method, n, delta, reps, seed, CellKey::default())
}

/// The individual log e-values behind [`log_expected_evidence`], in order.
pub fn sample_log_evidence(
    method: Method,
    n: u64,
    delta: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<f64>, McError> {
    let evaluator = Evaluator::new(method, n)?;
    let mut out = Vec::with_capacity(reps as usize);
    for shard in 0..shard_count(reps) {
        run_shard(
            &evaluator,
            n,
            delta,
            reps,
            seed,
            CellKey::default(),
            shard,
            |x| out.push(x),
        )?;
    }
    Ok(out)
}

/// Fills the whole (δ × method) grid. Cell failures are recorded in the
/// curve rather than aborting the sweep.
pub fn sweep(config: &MCConfig) -> Result<EvidenceCurve, McError> {
    config.validate()?;
    let shards = shard_count(config.reps);
    let evaluators: Vec<Evaluator> = config
        .methods
        .iter()
        .map(|&m| Evaluator::new(m, config.n))
        .collect::<Result<_, _>>()?;

    let jobs: Vec<(usize, usize, usize)> = (0..config.deltas.len())
        .flat_map(|d| (0..config.methods.len()).map(move |m| (d, m)))
        .flat_map(|(d, m)| (0..shards).map(move |s| (d, m, s)))
        .collect();
    let results: Vec<Result<EvidenceAccumulator, McError>> = jobs
        .par_iter()
        .map(|&(d, m, s)| {
            let cell = CellKey {
                delta_index: d,
                method_index: m,
            };
            accumulate_shard(
                &evaluators[m],
                config.n,
                config.deltas[d],
                config.reps,
                config.seed,
                cell,
                s,
            )
        })
        .collect();

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (cell_index, cell_shards) in results.chunks(shards).enumerate() {
        let delta = config.deltas[cell_index / config.methods.len()];
        let method = config.methods[cell_index % config.methods.len()];
        match reduce_shards(cell_shards.iter().cloned()) {
            Ok(est) => points.push(CurvePoint {
                delta,
                method,
                log_expected_evidence: est.value,
                std_error: est.std_error,
                mean_log_evidence: est.mean_log,
                mean_log_std_error: est.mean_log_std_error,
                reps: est.reps,
                n: config.n,
                seed: config.seed,
            }),
            Err(e) => failures.push(CellFailure {
                delta,
                method,
                message: e.to_string(),
            }),
        }
    }
    Ok(EvidenceCurve {
        n: config.n,
        reps: config.reps,
        seed: config.seed,
        points,
        failures,
    })
}

/// [`sweep`] on a dedicated pool of `threads` workers.
pub fn sweep_with_threads(config: &MCConfig, threads: usize) -> Result<EvidenceCurve, McError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| McError::ThreadPool(e.to_string()))?;
    pool.install(|| sweep(config))
}

// ---------------------------------------------------------------------------
// Reciprocal p-value under H0
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedMean {
    pub cap: f64,
    pub value: f64,
    pub std_error: f64,
    /// `∫₀¹ min(1/p, M) dp = 1 + ln M`, exact because p ~ Uniform(0, 1) under H0.
    pub analytic: f64,
    pub reps: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &MeanAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let total = na + nb;
        let d = other.mean - self.mean;
        self.mean += d * nb / total;
        self.m2 += other.m2 + d * d * na * nb / total;
        self.count += other.count;
    }

    fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let r = self.count as f64;
        (self.m2 / (r - 1.0) / r).sqrt()
    }
}

/// Monte Carlo means of `min(1/p, M)` under H0 for several caps `M`, all
/// computed from the same simulated p-values.
pub fn truncated_inverse_p_means(
    caps: &[f64],
    reps: u64,
    seed: u64,
    n: u64,
) -> Result<Vec<TruncatedMean>, McError> {
    if let Some(m) = caps.iter().find(|&&m| !(m > 1.0 && m.is_finite())) {
        return Err(McError::Config(format!(
            "cap M = {m} must be finite and > 1"
        )));
    }
    if n < 2 {
        return Err(McError::Config(format!("n = {n} must be at least 2")));
    }
    if reps < 2 {
        return Err(McError::Config("reps must be at least 2".into()));
    }
    let df = u32::try_from(n - 1).map_err(|_| McError::Config("n too large".into()))?;
    let shard_results: Vec<Result<Vec<MeanAccumulator>, McError>> = (0..shard_count(reps))
        .into_par_iter()
        .map(|shard| {
            let mut stream = NormalStream::new(substream(seed, CellKey::default(), shard));
            let mut accs = vec![MeanAccumulator::default(); caps.len()];
            for _ in 0..shard_len(reps, shard) {
                let (ts, _) = simulate_t(n, 0.0, &mut stream)?;
                let ln_p =
                    specfun::ln_student_t_two_sided_p(ts.t, df).map_err(EvidenceError::from)?;
                for (acc, &cap) in accs.iter_mut().zip(caps) {
                    // min(1/p, M) without forming 1/p when it overflows
                    let x = if -ln_p >= cap.ln() {
                        cap
                    } else {
                        (-ln_p).exp()
                    };
                    acc.push(x);
                }
            }
            Ok(accs)
        })
        .collect();
    let mut totals = vec![MeanAccumulator::default(); caps.len()];
    for shard in shard_results {
        for (t, s) in totals.iter_mut().zip(shard?) {
            t.merge(&s);
        }
    }
    Ok(caps
        .iter()
        .zip(totals)
        .map(|(&cap, acc)| TruncatedMean {
            cap,
            value: acc.mean,
            std_error: acc.std_error(),
            analytic: 1.0 + cap.ln(),
            reps: acc.count,
        })
        .collect())
}

/// Monte Carlo mean of `min(1/p, M)` under H0.
pub fn truncated_inverse_p_mean(
    cap: f64,
    reps: u64,
    seed: u64,
    n: u64,
) -> Result<TruncatedMean, McError> {
    Ok(truncated_inverse_p_means(&[cap], reps, seed, n)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_one_cells_are_exactly_zero() {
        let est = log_expected_evidence(Method::Fbf { b: 1.0 }, 20, 0.7, 2_000, 5).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.reps, 2_000);
    }

    #[test]
    fn simulate_t_is_deterministic() {
        let draw = |seed| {
            let mut s = NormalStream::new(substream(seed, CellKey::default(), 0));
            (0..50)
                .map(|_| simulate_t(20, 0.3, &mut s).unwrap().0.t.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }

    #[test]
    fn fewer_reps_is_a_prefix() {
        let long = sample_log_evidence(Method::InverseP, 10, 0.0, 70_000, 3).unwrap();
        let short = sample_log_evidence(Method::InverseP, 10, 0.0, 1_000, 3).unwrap();
        assert_eq!(&long[..1_000], &short[..]);
    }

    #[test]
    fn config_validation() {
        let good = MCConfig {
            n: 20,
            reps: 100,
            seed: 1,
            deltas: vec![0.0, 0.5],
            methods: vec![Method::Fbf { b: 0.1 }],
        };
        assert!(good.validate().is_ok());
        let mut bad = good.clone();
        bad.reps = 99;
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.deltas = vec![0.5, 0.0];
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.methods = vec![Method::Fbf { b: 0.04 }];
        assert!(bad.validate().is_err());
        let mut bad = good;
        bad.deltas = vec![f64::NAN];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn truncated_means_validate_caps() {
        assert!(truncated_inverse_p_mean(1.0, 100, 1, 20).is_err());
        assert!(truncated_inverse_p_mean(f64::INFINITY, 100, 1, 20).is_err());
        let t = truncated_inverse_p_mean(10.0, 1_000, 1, 20).unwrap();
        assert!((t.analytic - (1.0 + 10f64.ln())).abs() < 1e-15);
    }
}
