//! Log-gamma, the regularized incomplete beta function, Student-t p-values
//! and adaptive Gauss–Kronrod quadrature.
//!
//! `cargo run --example special_functions`

use fbf_evalue::specfun::{
    self, ln_beta, ln_gamma, ln_student_t_two_sided_p, reg_inc_beta, student_t_two_sided_p,
    Integrator,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "ln Γ(0.5) = {:.15}  (ln √π = {:.15})",
        ln_gamma(0.5)?,
        0.5 * std::f64::consts::PI.ln()
    );
    println!("ln Γ(171.5) = {:.6}", ln_gamma(171.5)?);
    println!("ln B(2.5, 4) = {:.12}", ln_beta(2.5, 4.0)?);
    println!(
        "I_0.8125(9.5, 0.5) = {:.15}",
        reg_inc_beta(9.5, 0.5, 0.8125)?
    );

    for (t, df) in [(2.093, 19), (1.0, 1), (40.0, 19)] {
        println!(
            "two-sided p(t = {t}, df = {df}) = {:.6e}   ln p = {:.6}",
            student_t_two_sided_p(t, df)?,
            ln_student_t_two_sided_p(t, df)?
        );
    }
    // Far in the tail p underflows but its logarithm does not.
    println!(
        "ln p(t = 1e6, df = 19) = {:.3}",
        ln_student_t_two_sided_p(1e6, 19)?
    );

    let gauss = specfun::integrate(|x: f64| (-x * x).exp(), -8.0, 8.0, 1e-12)?;
    println!(
        "∫ exp(-x²) over [-8, 8] = {:.15} (√π = {:.15}, {} evaluations)",
        gauss.value,
        std::f64::consts::PI.sqrt(),
        gauss.evaluations
    );

    // A budget that is too small reports the best estimate it reached.
    let tight = Integrator {
        max_subdivisions: 2,
        ..Integrator::with_tol(1e-14)
    };
    match tight.integrate(|x: f64| x.sqrt().sin(), 0.0, 100.0) {
        Ok(r) => println!("converged: {}", r.value),
        Err(e) => println!("as expected: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
