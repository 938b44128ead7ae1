//! Under the null the reciprocal p-value has infinite mean. Truncated
//! means follow 1 + ln M, and the untruncated running mean never settles.
//!
//! `cargo run --release --example pvalue_divergence`

use fbf_evalue::evidence::Method;
use fbf_evalue::mc;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (n, seed) = (20, 11);
    for m in mc::truncated_inverse_p_means(&[10.0, 100.0, 1000.0, 1e6], 50_000, seed, n)? {
        println!(
            "M = {:>9}: E[min(1/p, M)] = {:8.4} ± {:.4}   1 + ln M = {:8.4}",
            m.cap, m.value, m.std_error, m.analytic
        );
    }

    println!();
    for reps in [1_000, 10_000, 100_000] {
        let est = mc::log_expected_evidence(Method::InverseP, n, 0.0, reps, seed)?;
        println!(
            "{reps:>7} reps: ln mean(1/p) = {:7.4} (reported se {:.4})",
            est.value, est.std_error
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
