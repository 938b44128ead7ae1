//! Special functions and 1-D quadrature.
//!
//! Everything here is a pure function of its arguments. Evidence formulas
//! only ever consume these on the log scale, so the incomplete beta and
//! Student-t tail have log-space variants that stay finite where the
//! probability itself would underflow.

mod quadrature;

pub use quadrature::{integrate, Integrator, QuadratureResult};

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("{function}: argument {value} outside the domain ({constraint})")]
    Domain {
        function: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error(
        "quadrature did not reach tolerance {tol:e} after {subdivisions} subdivisions \
         (best estimate {:e} ± {:e})", best.value, best.abs_error_estimate
    )]
    NoConvergence {
        tol: f64,
        subdivisions: usize,
        best: QuadratureResult,
    },
    #[error("{function}: continued fraction failed to converge for a={a}, b={b}, x={x}")]
    ContinuedFraction {
        function: &'static str,
        a: f64,
        b: f64,
        x: f64,
    },
}

fn domain(function: &'static str, value: f64, constraint: &'static str) -> SpecFunError {
    SpecFunError::Domain {
        function,
        value,
        constraint,
    }
}

// ---------------------------------------------------------------------------
// Log-gamma
// ---------------------------------------------------------------------------

// Lanczos approximation with g = 607/128 and 15 terms (Godfrey's table).
const LANCZOS_G: f64 = 607.0 / 128.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_923_517,
    -59.597_960_355_475_491_248,
    14.136_097_974_741_747_174,
    -0.491_913_816_097_620_199_78,
    0.339_946_499_848_118_886_99e-4,
    0.465_236_289_270_485_756_65e-4,
    -0.983_744_753_048_795_646_77e-4,
    0.158_088_703_224_912_488_84e-3,
    -0.210_264_441_724_104_883_19e-3,
    0.217_439_618_115_212_643_20e-3,
    -0.164_318_106_536_763_890_22e-3,
    0.844_182_239_838_527_432_93e-4,
    -0.261_908_384_015_814_086_70e-4,
    0.368_991_826_595_316_227_04e-5,
];
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for real `x > 0`.
///
/// Lanczos series for `x ≥ 0.5`, reflection below. Relative error is
/// around 1e-15 on `[0.1, 200]`; `ln_gamma(1) == ln_gamma(2) == 0` exactly.
pub fn ln_gamma(x: f64) -> Result<f64, SpecFunError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(domain("ln_gamma", x, "x > 0 and finite"));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x < 0.5 {
        // Γ(x)Γ(1-x) = π / sin(πx)
        return Ok((PI / (PI * x).sin()).ln() - lanczos(1.0 - x));
    }
    Ok(lanczos(x))
}

fn lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln B(a, b)` for `a, b > 0`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64, SpecFunError> {
    Ok(ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?)
}

// ---------------------------------------------------------------------------
// Regularized incomplete beta
// ---------------------------------------------------------------------------

const CF_MAX_ITER: usize = 10_000;
const CF_EPS: f64 = f64::EPSILON;
const CF_TINY: f64 = 1e-300;

/// `I_x(a, b)` split into the branch that was evaluated directly.
///
/// `ln_direct` is the log of the directly computed tail; when `switched`
/// holds, the result is `1 - exp(ln_direct)` (the complement was computed
/// via `I_{1-x}(b, a)`).
struct IncBeta {
    ln_direct: f64,
    switched: bool,
}

impl IncBeta {
    fn value(&self) -> f64 {
        if self.switched {
            -self.ln_direct.exp_m1()
        } else {
            self.ln_direct.exp()
        }
    }

    fn ln_value(&self) -> f64 {
        if !self.switched {
            self.ln_direct
        } else if self.ln_direct > -std::f64::consts::LN_2 {
            (-self.ln_direct.exp_m1()).ln()
        } else {
            (-self.ln_direct.exp()).ln_1p()
        }
    }
}

fn check_inc_beta_args(a: f64, b: f64, x: f64) -> Result<(), SpecFunError> {
    if !(a.is_finite() && a > 0.0) {
        return Err(domain("reg_inc_beta", a, "a > 0"));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(domain("reg_inc_beta", b, "b > 0"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("reg_inc_beta", x, "0 <= x <= 1"));
    }
    Ok(())
}

/// Evaluates the incomplete beta given both `x` and `y = 1 - x`, so callers
/// that know `1 - x` in closed form avoid the cancellation.
fn inc_beta_parts(a: f64, b: f64, x: f64, y: f64) -> Result<IncBeta, SpecFunError> {
    if x == 0.0 {
        return Ok(IncBeta {
            ln_direct: f64::NEG_INFINITY,
            switched: false,
        });
    }
    if y == 0.0 {
        return Ok(IncBeta {
            ln_direct: f64::NEG_INFINITY,
            switched: true,
        });
    }
    let switched = x > (a + 1.0) / (a + b + 2.0);
    let (a, b, x, y) = if switched { (b, a, y, x) } else { (a, b, x, y) };
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b)? - a.ln();
    let cf = beta_continued_fraction(a, b, x)?;
    Ok(IncBeta {
        ln_direct: ln_front + cf.ln(),
        switched,
    })
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> Result<f64, SpecFunError> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(SpecFunError::ContinuedFraction {
        function: "reg_inc_beta",
        a,
        b,
        x,
    })
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64, SpecFunError> {
    check_inc_beta_args(a, b, x)?;
    Ok(inc_beta_parts(a, b, x, 1.0 - x)?.value().clamp(0.0, 1.0))
}

/// `ln I_x(a, b)`; finite whenever `x > 0`, including deep in the lower tail.
pub fn ln_reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64, SpecFunError> {
    check_inc_beta_args(a, b, x)?;
    Ok(inc_beta_parts(a, b, x, 1.0 - x)?.ln_value().min(0.0))
}

// ---------------------------------------------------------------------------
// Student-t
// ---------------------------------------------------------------------------

fn t_tail_parts(t: f64, df: u32) -> Result<IncBeta, SpecFunError> {
    if df < 1 {
        return Err(domain("student_t_two_sided_p", df as f64, "df >= 1"));
    }
    if !t.is_finite() {
        return Err(domain("student_t_two_sided_p", t, "t finite"));
    }
    let nu = df as f64;
    let t2 = t * t;
    // x = ν/(ν+t²), 1-x = t²/(ν+t²)
    let x = nu / (nu + t2);
    let y = t2 / (nu + t2);
    inc_beta_parts(0.5 * nu, 0.5, x, y)
}

/// Two-sided p-value `P(|T_df| ≥ |t|) = I_{df/(df+t²)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: u32) -> Result<f64, SpecFunError> {
    Ok(t_tail_parts(t, df)?.value().clamp(0.0, 1.0))
}

/// Log of [`student_t_two_sided_p`], accurate far into the tail where the
/// p-value itself underflows.
pub fn ln_student_t_two_sided_p(t: f64, df: u32) -> Result<f64, SpecFunError> {
    Ok(t_tail_parts(t, df)?.ln_value().min(0.0))
}
