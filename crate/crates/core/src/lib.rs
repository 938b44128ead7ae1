//! Fractional Bayes factor e-values for the one-sample t-test.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: log-gamma, the regularized incomplete beta function,
//!   Student-t tail probabilities and adaptive Gauss–Kronrod quadrature.
//! - [`seqstats`]: mergeable sufficient statistics `(n, Σx, Σx²)` and the
//!   t statistic they determine.
//! - [`evidence`]: the fractional Bayes factor, the JZS (right Haar scale
//!   prior) Bayes factor and the reciprocal p-value, all on the log scale.
//! - [`mc`]: seeded, order-independent Monte Carlo estimation of
//!   `ln E[E]` over a grid of standardized effects.
//! - [`cli`]: the `curve | safety | sequential | pvalue-demo` commands.
//!
//! ```
//! use fbf_evalue::evidence::{fbf_log_evidence, min_fraction};
//! use fbf_evalue::seqstats::SufficientStats;
//!
//! let stats = SufficientStats::from_samples(&[0.3, 1.2, -0.4, 0.9, 1.7]).unwrap();
//! let ts = stats.t_statistic().unwrap();
//! let b = min_fraction(ts.n).unwrap();
//! let ev = fbf_log_evidence(&ts, b).unwrap();
//! assert!(ev.log_e.is_finite());
//! ```

pub mod cli;
pub mod evidence;
pub mod mc;
pub mod seqstats;
pub mod specfun;

pub use evidence::{Fraction, LogEvidence, Method, TStat};
pub use mc::{EvidenceCurve, MCConfig};
pub use seqstats::SufficientStats;
