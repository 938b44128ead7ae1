//! Evidence for `H1: δ ≠ 0` against `H0: δ = 0` in the one-sample t-test.
//!
//! Three measures are provided, all returned as natural-log e-values:
//!
//! - the fractional Bayes factor, which trains the improper reference prior
//!   on a fraction `b` of the likelihood;
//! - the JZS Bayes factor: a Cauchy(`r`) prior on the standardized effect and
//!   the right Haar prior `1/σ` on the scale;
//! - the reciprocal two-sided p-value, which is *not* an e-value.
//!
//! Each depends on the data only through the t statistic and `n`, which makes
//! all of them invariant to rescaling the observations.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::{self, Integrator, SpecFunError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvidenceError {
    #[error("fraction b = {b} is invalid for n = {n}: need 1/n < b <= 1")]
    InvalidFraction { b: f64, n: u64 },
    #[error("fraction was validated for n = {fraction_n} but the t statistic has n = {n}")]
    FractionMismatch { fraction_n: u64, n: u64 },
    #[error("sample size n = {n} is too small (need n >= {min})")]
    SampleTooSmall { n: u64, min: u64 },
    #[error("t statistic must be finite, got {0}")]
    NonFiniteT(f64),
    #[error("Cauchy scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("Haar Bayes factor at t = {t}, n = {n}, r = {r}: {source}")]
    Quadrature {
        t: f64,
        n: u64,
        r: f64,
        #[source]
        source: SpecFunError,
    },
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A t statistic together with the sample size it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TStat {
    pub t: f64,
    pub df: u64,
    pub n: u64,
}

impl TStat {
    pub fn new(t: f64, n: u64) -> Result<Self, EvidenceError> {
        if n < 2 {
            return Err(EvidenceError::SampleTooSmall { n, min: 2 });
        }
        if !t.is_finite() {
            return Err(EvidenceError::NonFiniteT(t));
        }
        Ok(TStat { t, df: n - 1, n })
    }
}

/// Training fraction `b` of the fractional Bayes factor, valid for a fixed `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fraction {
    b: f64,
    n: u64,
}

impl Fraction {
    /// Requires `1/n < b ≤ 1`, which keeps the Gamma argument `(nb − 1)/2`
    /// positive.
    pub fn new(b: f64, n: u64) -> Result<Self, EvidenceError> {
        if n < 2 {
            return Err(EvidenceError::SampleTooSmall { n, min: 2 });
        }
        if !(b.is_finite() && n as f64 * b > 1.0 && b <= 1.0) {
            return Err(EvidenceError::InvalidFraction { b, n });
        }
        Ok(Fraction { b, n })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// The minimal training fraction `2/n`.
pub fn min_fraction(n: u64) -> Result<Fraction, EvidenceError> {
    if n < 3 {
        return Err(EvidenceError::SampleTooSmall { n, min: 3 });
    }
    Fraction::new(2.0 / n as f64, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Fbf { b: f64 },
    Haar { r: f64 },
    InverseP,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Fbf { .. } => "fbf",
            Method::Haar { .. } => "haar",
            Method::InverseP => "inverse_p",
        }
    }

    /// The fraction `b` or Cauchy scale `r`; `None` for the reciprocal p-value.
    pub fn param(&self) -> Option<f64> {
        match *self {
            Method::Fbf { b } => Some(b),
            Method::Haar { r } => Some(r),
            Method::InverseP => None,
        }
    }

    pub fn from_parts(label: &str, param: Option<f64>) -> Option<Method> {
        match (label, param) {
            ("fbf", Some(b)) => Some(Method::Fbf { b }),
            ("haar", Some(r)) => Some(Method::Haar { r }),
            ("inverse_p", None) => Some(Method::InverseP),
            _ => None,
        }
    }

    /// Whether the measure is meant to satisfy `E_H0[E] ≤ 1`.
    pub fn is_e_value(&self) -> bool {
        !matches!(self, Method::InverseP)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Fbf { b } => write!(f, "FBF(b={b})"),
            Method::Haar { r } => write!(f, "HaarBF(r={r})"),
            Method::InverseP => write!(f, "InverseP"),
        }
    }
}

/// An e-value on the natural-log scale, tagged with the measure that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEvidence {
    pub log_e: f64,
    pub method: Method,
}

impl LogEvidence {
    pub fn evidence(&self) -> f64 {
        self.log_e.exp()
    }
}

// ---------------------------------------------------------------------------
// Fractional Bayes factor
// ---------------------------------------------------------------------------

/// Fractional Bayes factor with the `t`-independent Gamma ratio precomputed.
#[derive(Debug, Clone, Copy)]
pub struct FbfEvaluator {
    fraction: Fraction,
    log_constant: f64,
    /// `−n(b − 1)/2`, non-negative.
    exponent: f64,
    df: f64,
}

impl FbfEvaluator {
    pub fn new(fraction: Fraction) -> Result<Self, EvidenceError> {
        let n = fraction.n as f64;
        let b = fraction.b;
        let nb = n * b;
        // Grouped so that b = 1 cancels exactly.
        let log_constant = (specfun::ln_gamma(nb / 2.0)? - specfun::ln_gamma(n / 2.0)?)
            + (specfun::ln_gamma((n - 1.0) / 2.0)? - specfun::ln_gamma((nb - 1.0) / 2.0)?);
        Ok(FbfEvaluator {
            fraction,
            log_constant,
            exponent: -n * (b - 1.0) / 2.0,
            df: n - 1.0,
        })
    }

    pub fn log_constant(&self) -> f64 {
        self.log_constant
    }

    pub fn log_evidence(&self, t: f64) -> f64 {
        self.log_constant + self.exponent * (t * t / self.df).ln_1p()
    }

    pub fn method(&self) -> Method {
        Method::Fbf { b: self.fraction.b }
    }
}

/// `ln FBF₁₀ = ln[Γ(nb/2)Γ((n−1)/2) / (Γ((nb−1)/2)Γ(n/2))] − (n(b−1)/2)·ln(1 + t²/(n−1))`.
pub fn fbf_log_evidence(ts: &TStat, fraction: Fraction) -> Result<LogEvidence, EvidenceError> {
    if fraction.n != ts.n {
        return Err(EvidenceError::FractionMismatch {
            fraction_n: fraction.n,
            n: ts.n,
        });
    }
    if ts.n < 3 {
        return Err(EvidenceError::SampleTooSmall { n: ts.n, min: 3 });
    }
    if !ts.t.is_finite() {
        return Err(EvidenceError::NonFiniteT(ts.t));
    }
    let eval = FbfEvaluator::new(fraction)?;
    Ok(LogEvidence {
        log_e: eval.log_evidence(ts.t),
        method: eval.method(),
    })
}

// ---------------------------------------------------------------------------
// JZS / right Haar Bayes factor
// ---------------------------------------------------------------------------

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
/// Grid spacing (in ln g) of the coarse peak search.
const PEAK_GRID_STEP: f64 = 1.0;
const GOLDEN_ITERATIONS: usize = 20;

/// JZS Bayes factor for a fixed `n` and Cauchy scale `r`.
///
/// With `g ~ InvGamma(1/2, 1/2)` mixing the effect prior `δ | g ~ N(0, g r²)`
/// and `ν = n − 1`,
///
/// ```text
/// BF₁₀ = ∫₀^∞ (1 + n r² g)^{-1/2} [(1 + t²/((1 + n r² g)ν)) / (1 + t²/ν)]^{-(ν+1)/2} p(g) dg
/// ```
///
/// The integral is taken over `s = ln g`, where the integrand has an O(1)
/// width for every `t`. It is divided by its located maximum before
/// quadrature and integrated over a window around the peak outside which it
/// is negligible relative to the peak.
#[derive(Debug, Clone, Copy)]
pub struct HaarEvaluator {
    n: u64,
    r: f64,
    integrator: Integrator,
}

impl HaarEvaluator {
    pub fn new(n: u64, r: f64) -> Result<Self, EvidenceError> {
        if n < 2 {
            return Err(EvidenceError::SampleTooSmall { n, min: 2 });
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(EvidenceError::InvalidScale(r));
        }
        Ok(HaarEvaluator {
            n,
            r,
            integrator: Integrator {
                tol: 1e-10,
                max_subdivisions: 200,
                max_depth: 60,
            },
        })
    }

    /// Log of the integrand with respect to `s = ln g`; `null_term` is
    /// `ln(1 + t²/ν)`.
    fn log_integrand(&self, s: f64, t2: f64, null_term: f64) -> f64 {
        let nu = (self.n - 1) as f64;
        let g = s.exp();
        let spread = 1.0 + self.n as f64 * self.r * self.r * g;
        let likelihood_ratio = -0.5 * (nu + 1.0) * ((t2 / (spread * nu)).ln_1p() - null_term);
        // prior density p(g) times the Jacobian dg/ds = g
        let log_prior = -HALF_LN_2PI - 0.5 * s - 0.5 / g;
        -0.5 * spread.ln() + likelihood_ratio + log_prior
    }

    /// Location and height of the integrand's maximum in `s`.
    fn peak(&self, t2: f64, null_term: f64) -> (f64, f64) {
        let lo = -12.0;
        let hi = 12.0 + t2.ln_1p() - (self.n as f64 * self.r * self.r).ln().min(0.0);
        let steps = ((hi - lo) / PEAK_GRID_STEP).ceil() as usize;
        let (mut best_s, mut best) = (lo, f64::NEG_INFINITY);
        for i in 0..=steps {
            let s = lo + i as f64 * PEAK_GRID_STEP;
            let v = self.log_integrand(s, t2, null_term);
            if v > best {
                best = v;
                best_s = s;
            }
        }
        // golden-section refinement inside the neighbouring grid cells
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (best_s - PEAK_GRID_STEP, best_s + PEAK_GRID_STEP);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (
            self.log_integrand(c, t2, null_term),
            self.log_integrand(d, t2, null_term),
        );
        for _ in 0..GOLDEN_ITERATIONS {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = self.log_integrand(c, t2, null_term);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = self.log_integrand(d, t2, null_term);
            }
        }
        let s = 0.5 * (a + b);
        let v = self.log_integrand(s, t2, null_term);
        if v >= best {
            (s, v)
        } else {
            (best_s, best)
        }
    }

    pub fn log_evidence(&self, t: f64) -> Result<f64, EvidenceError> {
        if !t.is_finite() {
            return Err(EvidenceError::NonFiniteT(t));
        }
        let t2 = t * t;
        let null_term = (t2 / (self.n - 1) as f64).ln_1p();
        let (mode, height) = self.peak(t2, null_term);
        // below s = -8 the prior factor exp(-1/(2g)) is under e^-1490
        let lo = (mode - 25.0).max(-8.0).min(mode - 1.0);
        let hi = mode + 40.0;
        let scaled = |s: f64| {
            let v = (self.log_integrand(s, t2, null_term) - height).exp();
            if v.is_nan() {
                0.0
            } else {
                v
            }
        };
        let quad = |a: f64, b: f64| {
            self.integrator
                .integrate(scaled, a, b)
                .map_err(|source| EvidenceError::Quadrature {
                    t,
                    n: self.n,
                    r: self.r,
                    source,
                })
        };
        let total = quad(lo, mode)?.value + quad(mode, hi)?.value;
        Ok(height + total.ln())
    }

    pub fn method(&self) -> Method {
        Method::Haar { r: self.r }
    }
}

/// Log JZS Bayes factor `ln BF₁₀` with Cauchy prior scale `r`.
pub fn haar_log_bf(ts: &TStat, r: f64) -> Result<LogEvidence, EvidenceError> {
    let eval = HaarEvaluator::new(ts.n, r)?;
    Ok(LogEvidence {
        log_e: eval.log_evidence(ts.t)?,
        method: eval.method(),
    })
}

// ---------------------------------------------------------------------------
// Reciprocal p-value
// ---------------------------------------------------------------------------

/// `−ln p` for the two-sided t-test p-value.
pub fn inverse_p_log_evidence(ts: &TStat) -> Result<LogEvidence, EvidenceError> {
    let df = u32::try_from(ts.df).map_err(|_| EvidenceError::SampleTooSmall { n: ts.n, min: 2 })?;
    let ln_p = specfun::ln_student_t_two_sided_p(ts.t, df)?;
    Ok(LogEvidence {
        log_e: -ln_p,
        method: Method::InverseP,
    })
}

/// A prepared evaluator for any [`Method`] at a fixed sample size.
#[derive(Debug, Clone, Copy)]
pub enum Evaluator {
    Fbf(FbfEvaluator),
    Haar(HaarEvaluator),
    InverseP { df: u32 },
}

impl Evaluator {
    pub fn new(method: Method, n: u64) -> Result<Self, EvidenceError> {
        match method {
            Method::Fbf { b } => {
                if n < 3 {
                    return Err(EvidenceError::SampleTooSmall { n, min: 3 });
                }
                Ok(Evaluator::Fbf(FbfEvaluator::new(Fraction::new(b, n)?)?))
            }
            Method::Haar { r } => Ok(Evaluator::Haar(HaarEvaluator::new(n, r)?)),
            Method::InverseP => {
                if n < 2 {
                    return Err(EvidenceError::SampleTooSmall { n, min: 2 });
                }
                let df = u32::try_from(n - 1)
                    .map_err(|_| EvidenceError::SampleTooSmall { n, min: 2 })?;
                Ok(Evaluator::InverseP { df })
            }
        }
    }

    pub fn log_evidence(&self, t: f64) -> Result<f64, EvidenceError> {
        match self {
            Evaluator::Fbf(e) => Ok(e.log_evidence(t)),
            Evaluator::Haar(e) => e.log_evidence(t),
            Evaluator::InverseP { df } => Ok(-specfun::ln_student_t_two_sided_p(t, *df)?),
        }
    }
}

/// Dispatches to the measure named by `method`.
pub fn log_evidence(ts: &TStat, method: Method) -> Result<LogEvidence, EvidenceError> {
    match method {
        Method::Fbf { b } => fbf_log_evidence(ts, Fraction::new(b, ts.n)?),
        Method::Haar { r } => haar_log_bf(ts, r),
        Method::InverseP => inverse_p_log_evidence(ts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(t: f64, n: u64) -> TStat {
        TStat::new(t, n).unwrap()
    }

    #[test]
    fn minimal_fraction() {
        assert_eq!(min_fraction(20).unwrap().b(), 0.1);
        assert_eq!(min_fraction(4).unwrap().b(), 0.5);
        assert_eq!(min_fraction(200).unwrap().b(), 0.01);
        assert!(min_fraction(2).is_err());
    }

    #[test]
    fn fraction_bounds() {
        assert!(Fraction::new(0.05, 20).is_err());
        assert!(Fraction::new(0.0, 20).is_err());
        assert!(Fraction::new(1.01, 20).is_err());
        assert!(Fraction::new(f64::NAN, 20).is_err());
        assert!(Fraction::new(0.051, 20).is_ok());
        assert!(Fraction::new(1.0, 20).is_ok());
    }

    #[test]
    fn fbf_goldens() {
        // 40-digit mpmath evaluations of the closed form
        let b = min_fraction(20).unwrap();
        let e0 = fbf_log_evidence(&ts(0.0, 20), b).unwrap();
        assert!(
            (e0.log_e - -1.684_859_002_208_901_2).abs() < 1e-12,
            "{}",
            e0.log_e
        );
        let e3 = fbf_log_evidence(&ts(3.0, 20), b).unwrap();
        assert!(
            (e3.log_e - 1.805_030_776_869_969_9).abs() < 1e-12,
            "{}",
            e3.log_e
        );
        assert_eq!(e3.method, Method::Fbf { b: 0.1 });
    }

    #[test]
    fn fbf_b_one_is_exactly_zero() {
        for &t in &[0.0, -1.3, 2.0, 50.0] {
            let b = Fraction::new(1.0, 20).unwrap();
            assert_eq!(fbf_log_evidence(&ts(t, 20), b).unwrap().log_e, 0.0);
        }
    }

    #[test]
    fn fbf_rejects_mismatched_fraction() {
        let b = min_fraction(20).unwrap();
        assert!(matches!(
            fbf_log_evidence(&ts(1.0, 21), b),
            Err(EvidenceError::FractionMismatch { .. })
        ));
    }

    #[test]
    fn fbf_constant_falls_as_b_approaches_one_over_n() {
        let n = 20;
        let mut prev = f64::INFINITY;
        for k in 0..30 {
            let b = 0.05 + 0.05 * 0.7f64.powi(k);
            let e = fbf_log_evidence(&ts(0.0, n), Fraction::new(b, n).unwrap()).unwrap();
            assert!(e.log_e.is_finite());
            assert!(e.log_e < prev, "b={b}");
            prev = e.log_e;
        }
    }

    #[test]
    fn haar_goldens() {
        // mpmath adaptive quadrature, 40 digits
        let cases = [
            (0.0, -1.768_564_260_156_874_7),
            (1.0, -1.297_639_674_707_944_8),
            (2.5, 0.836_314_779_540_080_6),
            (5.0, 5.888_934_578_665_473),
        ];
        for (t, want) in cases {
            let got = haar_log_bf(&ts(t, 20), 1.0).unwrap().log_e;
            assert!((got - want).abs() < 1e-8, "t={t}: {got} vs {want}");
        }
        let got = haar_log_bf(&ts(0.0, 20), std::f64::consts::FRAC_1_SQRT_2)
            .unwrap()
            .log_e;
        assert!((got - -1.459_612_454_150_121_8).abs() < 1e-8);
    }

    #[test]
    fn haar_is_even_and_handles_extreme_t() {
        for &t in &[0.4, 2.5, 7.0] {
            assert_eq!(
                haar_log_bf(&ts(t, 20), 1.0).unwrap().log_e,
                haar_log_bf(&ts(-t, 20), 1.0).unwrap().log_e
            );
        }
        let big = haar_log_bf(&ts(1e3, 20), 1.0).unwrap().log_e;
        assert!(big.is_finite() && big > 50.0);
    }

    #[test]
    fn haar_rejects_bad_scale() {
        assert!(haar_log_bf(&ts(1.0, 20), 0.0).is_err());
        assert!(haar_log_bf(&ts(1.0, 20), f64::NAN).is_err());
    }

    #[test]
    fn inverse_p_examples() {
        assert_eq!(inverse_p_log_evidence(&ts(0.0, 20)).unwrap().log_e, 0.0);
        let e = inverse_p_log_evidence(&ts(2.093, 20)).unwrap();
        assert!((e.log_e - 20f64.ln()).abs() < 1e-3);
        assert!((e.log_e - 2.995_684_695_829_269).abs() < 1e-11);
        assert!(inverse_p_log_evidence(&ts(1e12, 20))
            .unwrap()
            .log_e
            .is_finite());
    }

    #[test]
    fn method_labels_round_trip() {
        for m in [
            Method::Fbf { b: 0.3 },
            Method::Haar { r: 0.5 },
            Method::InverseP,
        ] {
            assert_eq!(Method::from_parts(m.label(), m.param()), Some(m));
        }
        assert_eq!(Method::from_parts("fbf", None), None);
    }
}
