//! Runs every example end to end.

#[path = "../examples/depth_basics.rs"]
mod depth_basics;

#[path = "../examples/dd_plot.rs"]
mod dd_plot;

#[path = "../examples/wilcoxon_rank_test.rs"]
mod wilcoxon_rank_test;

#[path = "../examples/robust_binning.rs"]
mod robust_binning;

#[path = "../examples/predictive_density.rs"]
mod predictive_density;

#[path = "../examples/conditional_cdf.rs"]
mod conditional_cdf;

#[path = "../examples/simulate_charme.rs"]
mod simulate_charme;

#[path = "../examples/distances.rs"]
mod distances;

#[path = "../examples/density_monitor.rs"]
mod density_monitor;

#[path = "../examples/rank_monitor.rs"]
mod rank_monitor;

#[path = "../examples/estimator_comparison.rs"]
mod estimator_comparison;

#[path = "../examples/stream_io.rs"]
mod stream_io;

#[test]
fn depth_basics_runs() {
    depth_basics::run_example().unwrap();
}

#[test]
fn dd_plot_runs() {
    dd_plot::run_example().unwrap();
}

#[test]
fn wilcoxon_rank_test_runs() {
    wilcoxon_rank_test::run_example().unwrap();
}

#[test]
fn robust_binning_runs() {
    robust_binning::run_example().unwrap();
}

#[test]
fn predictive_density_runs() {
    predictive_density::run_example().unwrap();
}

#[test]
fn conditional_cdf_runs() {
    conditional_cdf::run_example().unwrap();
}

#[test]
fn simulate_charme_runs() {
    simulate_charme::run_example().unwrap();
}

#[test]
fn distances_runs() {
    distances::run_example().unwrap();
}

#[test]
fn density_monitor_runs() {
    density_monitor::run_example().unwrap();
}

#[test]
fn rank_monitor_runs() {
    rank_monitor::run_example().unwrap();
}

#[test]
fn estimator_comparison_runs() {
    estimator_comparison::run_example().unwrap();
}

#[test]
fn stream_io_runs() {
    stream_io::run_example().unwrap();
}
