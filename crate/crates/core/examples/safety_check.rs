//! Monte Carlo check of E_H0[E] ≤ 1 on the log scale for each method.
//!
//! `cargo run --release --example safety_check`

use fbf_evalue::evidence::Method;
use fbf_evalue::mc;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (n, reps, seed) = (20, 20_000, 2021);
    for method in [
        Method::Fbf { b: 0.1 },
        Method::Fbf { b: 0.5 },
        Method::Haar { r: 1.0 },
        Method::InverseP,
    ] {
        let est = mc::log_expected_evidence(method, n, 0.0, reps, seed)?;
        let verdict = if est.value <= 3.0 * est.std_error {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "{verdict} {:<14} ln E_H0[E] = {:8.4} ± {:.4}   mean ln E = {:8.4}",
            method.to_string(),
            est.value,
            est.std_error,
            est.mean_log
        );
    }
    println!("({reps} simulated data sets of size {n}; 1/p is not an e-value)");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
