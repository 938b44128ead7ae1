//! Independent reference computations used by the integration tests.
//!
//! Nothing here calls into the crate's special functions or quadrature.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_samples(rng: &mut ChaCha8Rng, len: usize, mean: f64, sd: f64) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen();
            mean + sd * (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
        })
        .collect()
}

fn sigmoid(q: f64) -> f64 {
    1.0 / (1.0 + (-q).exp())
}

/// `∫ t^{a-1} (1-t)^{b-1} dt` over `[lo, hi] ⊂ [0, 1]` by tanh-sinh
/// quadrature. Endpoint distances are formed directly from the node map so
/// algebraic singularities at 0 and 1 keep full precision.
fn beta_density_integral(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let width = hi - lo;
    let h = 1.0 / 128.0;
    let mut total = 0.0;
    let k_max = (6.0 / h) as i64;
    for k in -k_max..=k_max {
        let u = k as f64 * h;
        let q = PI * u.sinh();
        let (sp, sm) = (sigmoid(q), sigmoid(-q));
        let left = width * sp; // distance from lo
        let right = width * sm; // distance from hi
        if left == 0.0 || right == 0.0 {
            continue;
        }
        let t = if lo == 0.0 { left } else { lo + left };
        let one_minus_t = if hi == 1.0 { right } else { (1.0 - hi) + right };
        let jac = width * sp * sm * PI * u.cosh();
        let f = ((a - 1.0) * t.ln() + (b - 1.0) * one_minus_t.ln()).exp();
        total += f * jac;
    }
    total * h
}

/// Regularized incomplete beta from quadrature of the beta density.
pub fn inc_beta_oracle(a: f64, b: f64, x: f64) -> f64 {
    let part = |hi: f64| {
        beta_density_integral(a, b, 0.0, hi.min(0.5))
            + if hi > 0.5 {
                beta_density_integral(a, b, 0.5, hi)
            } else {
                0.0
            }
    };
    part(x) / part(1.0)
}

/// JZS Bayes factor by composite midpoint quadrature over `s = ln g` on
/// `[-12, 40]` with `nodes` points.
pub fn haar_log_bf_oracle(t: f64, n: u64, r: f64, nodes: usize) -> f64 {
    let nu = (n - 1) as f64;
    let nf = n as f64;
    let (lo, hi) = (-12.0, 40.0);
    let h = (hi - lo) / nodes as f64;
    let null = (1.0 + t * t / nu).powf(-(nu + 1.0) / 2.0);
    let mut total = 0.0;
    for i in 0..nodes {
        let s = lo + (i as f64 + 0.5) * h;
        let g = s.exp();
        let spread = 1.0 + nf * r * r * g;
        let alt = spread.powf(-0.5) * (1.0 + t * t / (spread * nu)).powf(-(nu + 1.0) / 2.0);
        let prior = (2.0 * PI).powf(-0.5) * g.powf(-1.5) * (-0.5 / g).exp();
        total += alt * prior * g;
    }
    (total * h / null).ln()
}

/// ln Γ by upward recurrence to x ≥ 30 and the Stirling series.
pub fn stirling_ln_gamma(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 30.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2 * (1.0 / 1260.0 + inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0)))));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series
}

/// One pass/fail line per acceptance criterion.
pub fn report(id: &str, pass: bool, detail: impl std::fmt::Display) -> bool {
    println!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
