//! The three evidence measures side by side for a few t statistics:
//! the fractional Bayes factor at several training fractions, the
//! Haar-prior Bayes factor and the reciprocal p-value.
//!
//! `cargo run --example evidence_measures`

use std::f64::consts::FRAC_1_SQRT_2;

use fbf_evalue::evidence::{log_evidence, min_fraction, FbfEvaluator, Fraction, Method, TStat};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 20;
    let b_min = min_fraction(n)?.b();
    let methods = [
        Method::Fbf { b: b_min },
        Method::Fbf { b: 0.5 },
        Method::Fbf { b: 1.0 },
        Method::Haar { r: 1.0 },
        Method::Haar { r: FRAC_1_SQRT_2 },
        Method::InverseP,
    ];

    print!("{:>6}", "t");
    for m in &methods {
        print!("{:>20}", m.to_string());
    }
    println!();
    for t in [0.0, 1.0, 2.093, 3.0, 5.0] {
        let ts = TStat::new(t, n)?;
        print!("{t:>6}");
        for &m in &methods {
            print!("{:>20.6}", log_evidence(&ts, m)?.log_e);
        }
        println!();
    }
    println!("(natural-log evidence, n = {n})");

    // Evaluators precompute the t-independent constant once.
    let fbf = FbfEvaluator::new(Fraction::new(b_min, n)?)?;
    println!(
        "\nminimal fraction b = {b_min}: ln constant = {:.12}, ln FBF(t = 3) = {:.12}",
        fbf.log_constant(),
        fbf.log_evidence(3.0)
    );

    for bad in [0.01, 1.5] {
        if let Err(e) = Fraction::new(bad, n) {
            println!("Fraction::new({bad}, {n}) rejected: {e}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
