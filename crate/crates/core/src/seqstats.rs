//! Sufficient statistics `(n, Σx, Σx²)` for batches of real data.
//!
//! Batches combine by componentwise addition, so an evidence value can be
//! recomputed on the full data after each new batch without keeping the raw
//! observations around.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::TStat;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("cannot summarise an empty batch")]
    Empty,
    #[error("observation {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("invalid sufficient statistics: {0}")]
    Invalid(String),
    #[error("t statistic needs at least 2 observations, got {0}")]
    TooFew(u64),
    #[error(
        "sample variance {variance:e} is degenerate (threshold {threshold:e}); data are constant"
    )]
    DegenerateVariance { variance: f64, threshold: f64 },
}

/// Relative threshold below which the sample variance counts as zero.
pub const DEGENERATE_VARIANCE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStats")]
pub struct SufficientStats {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

#[derive(Deserialize)]
struct RawStats {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl TryFrom<RawStats> for SufficientStats {
    type Error = StatsError;

    fn try_from(raw: RawStats) -> Result<Self, Self::Error> {
        SufficientStats::new(raw.n, raw.sum, raw.sum_sq)
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Incremental builder behind [`SufficientStats::from_samples`], for callers
/// that generate observations one at a time.
#[derive(Debug, Default, Clone, Copy)]
pub struct StatsAccumulator {
    n: u64,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
}

impl StatsAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn finish(&self) -> Result<SufficientStats, StatsError> {
        if self.n == 0 {
            return Err(StatsError::Empty);
        }
        let (sum, sum_sq) = (self.sum.total(), self.sum_sq.total());
        if !sum.is_finite() || !sum_sq.is_finite() {
            return Err(StatsError::Invalid("sums are not finite".into()));
        }
        Ok(SufficientStats {
            n: self.n,
            sum,
            sum_sq,
        })
    }
}

impl SufficientStats {
    /// Validates externally supplied statistics (e.g. a stored batch record).
    pub fn new(n: u64, sum: f64, sum_sq: f64) -> Result<Self, StatsError> {
        if n == 0 {
            return Err(StatsError::Invalid("n must be at least 1".into()));
        }
        if !sum.is_finite() || !sum_sq.is_finite() {
            return Err(StatsError::Invalid("sum and sum_sq must be finite".into()));
        }
        // Cauchy–Schwarz, with room for rounding in the stored values.
        let floor = sum * sum / n as f64;
        if sum_sq < floor * (1.0 - 1e-12) {
            return Err(StatsError::Invalid(format!(
                "sum_sq {sum_sq} is below sum^2/n = {floor}"
            )));
        }
        Ok(SufficientStats { n, sum, sum_sq })
    }

    pub fn from_samples(xs: &[f64]) -> Result<Self, StatsError> {
        let mut acc = StatsAccumulator::default();
        for (index, &x) in xs.iter().enumerate() {
            if !x.is_finite() {
                return Err(StatsError::NonFinite { index, value: x });
            }
            acc.push(x);
        }
        acc.finish()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Statistics of the concatenated batches.
    #[must_use]
    pub fn combine(&self, other: &SufficientStats) -> SufficientStats {
        SufficientStats {
            n: self.n + other.n,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    /// Unbiased sample variance `(Σx² − (Σx)²/n)/(n − 1)`.
    pub fn sample_variance(&self) -> Result<f64, StatsError> {
        if self.n < 2 {
            return Err(StatsError::TooFew(self.n));
        }
        let n = self.n as f64;
        Ok((self.sum_sq - self.sum * self.sum / n) / (n - 1.0))
    }

    /// The one-sample t statistic `mean·√n / sd` with `n − 1` degrees of
    /// freedom.
    ///
    /// The variance is rejected as degenerate when it does not exceed
    /// `1e-12` times the mean square, a threshold that scales with the data.
    pub fn t_statistic(&self) -> Result<TStat, StatsError> {
        let variance = self.sample_variance()?;
        let n = self.n as f64;
        let threshold = DEGENERATE_VARIANCE_RTOL * (self.sum_sq / n);
        if variance.is_nan() || variance <= threshold {
            return Err(StatsError::DegenerateVariance {
                variance,
                threshold,
            });
        }
        let t = self.mean() * n.sqrt() / variance.sqrt();
        TStat::new(t, self.n).map_err(|e| StatsError::Invalid(e.to_string()))
    }
}

/// Folds a non-empty sequence of batches into their combined statistics.
pub fn combine_all<'a, I>(batches: I) -> Option<SufficientStats>
where
    I: IntoIterator<Item = &'a SufficientStats>,
{
    batches.into_iter().copied().reduce(|a, b| a.combine(&b))
}
