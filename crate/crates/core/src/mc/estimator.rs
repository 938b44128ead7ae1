//! Streaming estimators of `ln E[E]` and `E[ln E]` from log-scale samples.

use serde::{Deserialize, Serialize};

/// Running `ln Σ exp(xᵢ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.scaled == 0.0 {
            return;
        }
        if self.scaled == 0.0 {
            *self = *other;
        } else if other.max <= self.max {
            self.scaled += other.scaled * (other.max - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        self.max + self.scaled.ln()
    }
}

/// `ln((1/R) Σ exp(xᵢ))` in one pass.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    let mut acc = LogSumExp::default();
    xs.iter().for_each(|&x| acc.push(x));
    acc.value() - (xs.len() as f64).ln()
}

/// Accumulates log e-values for both estimands. Mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvidenceAccumulator {
    count: u64,
    first: LogSumExp,
    second: LogSumExp,
    // Welford state for ln E
    mean_log: f64,
    m2_log: f64,
    pub(crate) retries: u64,
}

impl EvidenceAccumulator {
    pub fn push(&mut self, log_e: f64) {
        self.count += 1;
        self.first.push(log_e);
        self.second.push(2.0 * log_e);
        let delta = log_e - self.mean_log;
        self.mean_log += delta / self.count as f64;
        self.m2_log += delta * (log_e - self.mean_log);
    }

    pub fn merge(&mut self, other: &EvidenceAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let total = na + nb;
        let delta = other.mean_log - self.mean_log;
        self.mean_log += delta * nb / total;
        self.m2_log += other.m2_log + delta * delta * na * nb / total;
        self.count += other.count;
        self.first.merge(&other.first);
        self.second.merge(&other.second);
        self.retries += other.retries;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn estimate(&self) -> Estimate {
        let r = self.count as f64;
        let ln_r = r.ln();
        let log_m1 = self.first.value() - ln_r;
        let log_m2 = self.second.value() - ln_r;
        // Delta method: Var(ln Ē) ≈ (M₂/M₁² − 1)/R
        let rel_var = (log_m2 - 2.0 * log_m1).exp_m1().max(0.0);
        let var_log = if self.count > 1 {
            self.m2_log / (r - 1.0)
        } else {
            0.0
        };
        Estimate {
            value: log_m1,
            std_error: (rel_var / r).sqrt(),
            mean_log: self.mean_log,
            mean_log_std_error: (var_log / r).sqrt(),
            reps: self.count,
            retries: self.retries,
        }
    }
}

/// Monte Carlo estimate for one (method, n, δ) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// `ln((1/R) Σ Eᵢ)`.
    pub value: f64,
    pub std_error: f64,
    /// `(1/R) Σ ln Eᵢ`.
    pub mean_log: f64,
    pub mean_log_std_error: f64,
    pub reps: u64,
    /// Redraws caused by degenerate (constant) simulated samples.
    pub retries: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_mean_then_log() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i as f64) * 0.37).sin() * 2.0).collect();
        let naive = (xs.iter().map(|x| x.exp()).sum::<f64>() / xs.len() as f64).ln();
        assert!((log_mean_exp(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn merge_is_order_consistent() {
        let xs: Vec<f64> = (0..500).map(|i| (i as f64 * 0.11).cos() * 30.0).collect();
        let mut whole = EvidenceAccumulator::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut left = EvidenceAccumulator::default();
        let mut right = EvidenceAccumulator::default();
        xs[..123].iter().for_each(|&x| left.push(x));
        xs[123..].iter().for_each(|&x| right.push(x));
        left.merge(&right);
        let (a, b) = (whole.estimate(), left.estimate());
        assert!((a.value - b.value).abs() < 1e-12);
        assert!((a.std_error - b.std_error).abs() < 1e-12);
        assert!((a.mean_log - b.mean_log).abs() < 1e-12);
        assert!((a.mean_log_std_error - b.mean_log_std_error).abs() < 1e-12);
    }

    #[test]
    fn constant_evidence_has_zero_error() {
        let mut acc = EvidenceAccumulator::default();
        (0..1000).for_each(|_| acc.push(0.0));
        let e = acc.estimate();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn huge_log_values_do_not_overflow() {
        let mut acc = EvidenceAccumulator::default();
        [800.0, 801.0, 799.0].iter().for_each(|&x| acc.push(x));
        let e = acc.estimate();
        assert!(e.value.is_finite() && e.std_error.is_finite());
        assert!((e.value - 800.0).abs() < 1.0);
    }

    #[test]
    fn standard_error_matches_direct_formula() {
        let xs = [0.1f64, -0.4, 0.9, 0.3, -1.2];
        let es: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let r = es.len() as f64;
        let m1 = es.iter().sum::<f64>() / r;
        let m2 = es.iter().map(|e| e * e).sum::<f64>() / r;
        let want = ((m2 / (m1 * m1) - 1.0) / r).sqrt();
        let mut acc = EvidenceAccumulator::default();
        xs.iter().for_each(|&x| acc.push(x));
        assert!((acc.estimate().std_error - want).abs() < 1e-12);
    }
}
