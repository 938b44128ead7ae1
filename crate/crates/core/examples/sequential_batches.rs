//! Accumulating evidence over data batches from stored sufficient
//! statistics only, and checking it against the full data.
//!
//! `cargo run --example sequential_batches`

use fbf_evalue::evidence::{fbf_log_evidence, min_fraction, Fraction};
use fbf_evalue::seqstats::{combine_all, SufficientStats};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let data = [
        0.42, 1.31, -0.27, 0.88, 1.95, 0.12, 0.67, 1.04, -0.51, 1.43, 0.76, 0.29, 1.18, 0.93, 1.62,
        -0.08, 0.55, 1.27, 0.84, 0.31, 1.09, 0.47, 1.71, 0.66,
    ];
    let sizes = [4, 6, 8, 6];
    let n_total = data.len() as u64;
    let fraction = Fraction::new(2.0 / n_total as f64, n_total)?;

    let mut stored: Vec<SufficientStats> = Vec::new();
    let mut start = 0;
    for size in sizes {
        let batch = &data[start..start + size];
        start += size;
        stored.push(SufficientStats::from_samples(batch)?);

        let so_far = combine_all(&stored).expect("at least one batch");
        let ts = so_far.t_statistic()?;
        // Only (n, Σx, Σx²) per batch is kept; the raw data could be discarded.
        println!(
            "after {} batches: n = {:>2}, t = {:7.4}, ln FBF(b = 2/n) = {:8.4}",
            stored.len(),
            so_far.n(),
            ts.t,
            fbf_log_evidence(&ts, min_fraction(so_far.n())?)?.log_e
        );
    }

    let batched = combine_all(&stored).unwrap().t_statistic()?;
    let full = SufficientStats::from_samples(&data)?.t_statistic()?;
    let diff =
        fbf_log_evidence(&batched, fraction)?.log_e - fbf_log_evidence(&full, fraction)?.log_e;
    println!("batched vs full data: |Δ ln FBF| = {:e}", diff.abs());

    println!(
        "\nJSON record for the first batch: {}",
        serde_json::to_string(&stored[0])?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
