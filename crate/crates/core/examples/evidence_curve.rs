//! A small version of the growth curve ln E_δ[E] against the standardized
//! effect δ, computed with the parallel sweep and written as CSV.
//!
//! `cargo run --release --example evidence_curve`

use fbf_evalue::cli::output::{curve_rows, write_csv};
use fbf_evalue::cli::Estimand;
use fbf_evalue::evidence::Method;
use fbf_evalue::mc::{self, MCConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = MCConfig {
        n: 20,
        reps: 5_000,
        seed: 7,
        deltas: vec![0.0, 0.5, 1.0, 1.5],
        methods: vec![
            Method::Fbf { b: 0.1 },
            Method::Fbf { b: 0.8 },
            Method::Haar { r: 1.0 },
        ],
    };
    let curve = mc::sweep(&config)?;

    for method in &config.methods {
        let values: Vec<String> = curve
            .series(*method)
            .iter()
            .map(|p| format!("{:7.3}", p.log_expected_evidence))
            .collect();
        println!("{:<14} {}", method.to_string(), values.join(" "));
    }

    // The same table the `curve` command prints.
    let mut out = std::io::stdout();
    write_csv(&curve_rows(&curve, Estimand::LogOfMean), &mut out)?;

    // Thread count changes nothing but speed.
    let single = mc::sweep_with_threads(&config, 1)?;
    assert_eq!(single.points, curve.points);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
