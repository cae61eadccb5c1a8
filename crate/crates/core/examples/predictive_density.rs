//! Predictive density of a SETAR stream from one window, against the
//! model's one-step conditional density. With delay 1 the regime depends on
//! the conditioning value alone, so the truth is a function of `x`.

use std::error::Error;

use depthstream::cde::{estimate_pd_values, CdeConfig};
use depthstream::distance::hellinger;
use depthstream::sim::{simulate_setar, true_conditional_density, InnovationSpec, ModelSpec, SetarSpec, TruthContext};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let spec = SetarSpec {
        rows: vec![vec![1.0, 0.6], vec![5.0, -0.6]],
        thresholds: vec![3.0],
        delay: 1,
        innovation: InnovationSpec::normal(),
        scale: 1.0,
    };
    let traj = simulate_setar(&spec, 600, 500, 21)?;

    let cfg = CdeConfig { grid_points: 120, max_conditions: 4, ..Default::default() };
    let est = estimate_pd_values(&traj.values, &cfg)?;
    let meta = est.meta.as_ref().unwrap();
    println!(
        "h_x = {:.3}, h_y = {:.3}, {} support points, {} fallbacks",
        meta.bandwidths.hx, meta.bandwidths.hy, meta.support_points, meta.fallback_count
    );

    let n = traj.len();
    let ctx = TruthContext { history: vec![traj.clean[n - 2]], sigma2: None };
    let model = ModelSpec::Setar(spec);
    for (l, &a) in est.condition_points.iter().enumerate() {
        let truth = true_conditional_density(&model, a, &ctx, &est.y_grid)?;
        let d = hellinger(est.row(l), &truth, &est.y_grid)?;
        let mass = depthstream::stats::trapezoid(&truth, est.spacing());
        println!("x = {a:+.2}: estimate integrates to {:.3}, truth to {mass:.3}, Hellinger {d:.3}", est.row_integrals()[l]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
