//! Runs every example so they cannot drift from the library.

macro_rules! example {
    ($name:ident, $path:literal) => {
        #[allow(dead_code)]
        #[path = $path]
        mod $name;

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(special_functions, "../examples/special_functions.rs");
example!(evidence_measures, "../examples/evidence_measures.rs");
example!(sequential_batches, "../examples/sequential_batches.rs");
example!(safety_check, "../examples/safety_check.rs");
example!(evidence_curve, "../examples/evidence_curve.rs");
example!(pvalue_divergence, "../examples/pvalue_divergence.rs");
