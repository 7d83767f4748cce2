macro_rules! example {
    ($name:ident, $path:literal) => {
        #[allow(dead_code)]
        mod $name {
            include!($path);
        }
    };
}

example!(quantize_layer, "../examples/quantize_layer.rs");
example!(codegemm_vs_dequant, "../examples/codegemm_vs_dequant.rs");
example!(bit_budget, "../examples/bit_budget.rs");
example!(complexity, "../examples/complexity.rs");
example!(layer_file, "../examples/layer_file.rs");
example!(kmeans, "../examples/kmeans.rs");
example!(bench_sweep, "../examples/bench_sweep.rs");

#[test]
fn quantize_layer_error_falls_with_codebooks() {
    let errors = quantize_layer::run_example().unwrap();
    assert_eq!(errors.len(), 3);
}

#[test]
fn codegemm_reads_m_over_v_of_dense() {
    assert_eq!(codegemm_vs_dequant::run_example().unwrap(), 0.5);
}

#[test]
fn bit_budget_finds_two_bit_configs() {
    assert!(bit_budget::run_example().unwrap() >= 5);
}

#[test]
fn complexity_build_fraction() {
    let build = complexity::run_example().unwrap();
    assert!((build - 1024.0 / (1024.0 + 1024.0)).abs() < 1e-12);
}

#[test]
fn layer_file_round_trips() {
    assert!(layer_file::run_example().unwrap() > 45);
}

#[test]
fn kmeans_separates_blobs() {
    assert!(kmeans::run_example().unwrap() < 300.0 * 0.5);
}

#[test]
fn bench_sweep_emits_one_row_per_run() {
    // 2 shapes x 2 tiles x 3 engines
    assert_eq!(bench_sweep::run_example().unwrap(), 12);
}
