//! End-to-end tests of the `fbf-evalue` binary.

use std::path::Path;
use std::process::{Command, Output};

use fbf_evalue::cli::output::{parse_curve_csv, CURVE_HEADER};
use fbf_evalue::seqstats::SufficientStats;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbf-evalue"))
        .args(args)
        .output()
        .expect("run fbf-evalue")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_batches(dir: &Path, batches: &[SufficientStats]) -> String {
    let path = dir.join("batches.jsonl");
    let text: String = batches
        .iter()
        .map(|b| serde_json::to_string(b).unwrap() + "\n")
        .collect();
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn curve_csv_has_documented_header() {
    let out = run(&[
        "curve",
        "--reps",
        "500",
        "--deltas",
        "0,1",
        "--fractions",
        "0.1",
        "--haar-scale",
        "none",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some(CURVE_HEADER));
    let rows = parse_curve_csv(&text).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows
        .iter()
        .all(|r| r.reps == 500 && r.n == 20 && r.method == "fbf"));
}

#[test]
fn fraction_one_gives_zero_everywhere() {
    let out = run(&[
        "curve",
        "--reps",
        "300",
        "--deltas",
        "0:1:0.5",
        "--fractions",
        "1.0",
        "--haar-scale",
        "none",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = parse_curve_csv(&stdout(&out)).unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r.log_expected_evidence, 0.0);
        assert_eq!(r.std_error, 0.0);
    }
}

#[test]
fn json_output_records_resolved_config() {
    let out = run(&[
        "curve",
        "--reps",
        "200",
        "--deltas",
        "0.5",
        "--fractions",
        "0.3",
        "--haar-scale",
        "none",
        "--seed",
        "9",
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["metadata"]["command"], "curve");
    assert_eq!(doc["metadata"]["config"]["seed"], 9);
    assert_eq!(doc["metadata"]["config"]["n"], 20);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"n": 12, "reps": 250, "seed": 3, "deltas": [0.0], "fractions": [0.5], "haar_scales": []}"#,
    )
    .unwrap();
    let path = config.display().to_string();
    let out = run(&["curve", "--config", &path, "--seed", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = parse_curve_csv(&stdout(&out)).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].n, rows[0].reps, rows[0].seed), (12, 250, 4));

    std::fs::write(&config, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(run(&["curve", "--config", &path]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(
        run(&["pvalue-demo", "--caps", "1.0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["curve", "--fractions", "0.01"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["curve", "--deltas", "abc"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let out = run(&[
        "curve",
        "--reps",
        "200",
        "--deltas",
        "0",
        "--fractions",
        "0.2",
        "--haar-scale",
        "none",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(parse_curve_csv(&text).unwrap().len(), 1);
}

#[test]
fn pvalue_demo_reports_each_cap() {
    let out = run(&["pvalue-demo", "--caps", "10,100", "--reps", "20000"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("cap,empirical_mean,analytic"));
    assert_eq!(text.lines().count(), 3);
}

// ---------------------------------------------------------------------------
// sequential
// ---------------------------------------------------------------------------

fn data_and_batches(dir: &Path) -> (String, String, f64) {
    let xs: Vec<f64> = (0..30)
        .map(|i| 0.4 + ((i * 37 % 11) as f64 - 5.0) / 3.0)
        .collect();
    let batches: Vec<SufficientStats> = [0..7, 7..8, 8..19, 19..30]
        .into_iter()
        .map(|r| SufficientStats::from_samples(&xs[r]).unwrap())
        .collect();
    let data_path = dir.join("data.txt");
    let text: String = xs.iter().map(|x| format!("{x}\n")).collect();
    std::fs::write(&data_path, text).unwrap();
    let full = SufficientStats::from_samples(&xs)
        .unwrap()
        .t_statistic()
        .unwrap();
    let expected = fbf_evalue::evidence::fbf_log_evidence(
        &full,
        fbf_evalue::evidence::min_fraction(30).unwrap(),
    )
    .unwrap()
    .log_e;
    (
        write_batches(dir, &batches),
        data_path.display().to_string(),
        expected,
    )
}

#[test]
fn sequential_matches_full_data() {
    let dir = tempfile::tempdir().unwrap();
    let (batches, data, expected) = data_and_batches(dir.path());
    let out = run(&[
        "sequential",
        "--batches",
        &batches,
        "--data",
        &data,
        "--n-total",
        "30",
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let final_log = doc["summary"]["final_log_evidence"].as_f64().unwrap();
    assert!((final_log - expected).abs() <= 1e-10);
    assert!(doc["summary"]["max_discrepancy"].as_f64().unwrap() <= 1e-10);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn sequential_rejects_wrong_total() {
    let dir = tempfile::tempdir().unwrap();
    let (batches, _, _) = data_and_batches(dir.path());
    let out = run(&["sequential", "--batches", &batches, "--n-total", "31"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sequential_single_batch() {
    let dir = tempfile::tempdir().unwrap();
    let stats = SufficientStats::from_samples(&[0.3, 1.2, -0.4, 2.2, 0.9]).unwrap();
    let batches = write_batches(dir.path(), &[stats]);
    let out = run(&["sequential", "--batches", &batches]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 2);
    assert!(stderr(&out).contains("full-data check skipped"));
}

#[test]
fn sequential_reports_bad_record_index() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(
        &path,
        "{\"n\": 3, \"sum\": 1.0, \"sum_sq\": 2.0}\n\n{\"n\": 0, \"sum\": 0.0, \"sum_sq\": 0.0}\n",
    )
    .unwrap();
    let out = run(&["sequential", "--batches", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("batch record 1 (line 3)"),
        "{}",
        stderr(&out)
    );
}

// ---------------------------------------------------------------------------
// safety
// ---------------------------------------------------------------------------

#[test]
fn safety_with_fraction_one_passes_exactly() {
    let out = run(&[
        "safety",
        "--reps",
        "500",
        "--fractions",
        "1.0",
        "--haar-scale",
        "none",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("PASS FBF(b=1)"));
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("fbf,1.0,0.0,0.0,0.0,PASS"), "{row}");
}

#[test]
fn safety_excuses_expected_unsafe_inverse_p() {
    let args = [
        "safety",
        "--reps",
        "20000",
        "--fractions",
        "0.5",
        "--haar-scale",
        "none",
    ];
    let out = run(&[&args[..], &["--expect-unsafe", "inverse-p"]].concat());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.contains("FAIL InverseP"), "{err}");
    assert!(err.contains("[expected unsafe]"));

    let out = run(&[&args[..], &["--inverse-p"]].concat());
    assert_eq!(out.status.code(), Some(3));
}
