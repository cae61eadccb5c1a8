//! Replication table of the three predictive density estimators on
//! contaminated SETAR mixtures.

use std::error::Error;

use depthstream::experiment::{run_table, setar_mix_scenarios, EvalSettings, Estimator};
use depthstream::sim::ContaminationSpec;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let scenarios = setar_mix_scenarios(400, Some(ContaminationSpec::additive_relative(0.1, 0.0, 3.0)));
    let settings = EvalSettings { grid_points: 100, conditions: 5, ..Default::default() };
    let rows = run_table(&scenarios[..2], &Estimator::ALL, 2, &settings, 1, 1)?;
    println!("{:<8} {:<16} {:>8} {:>8}", "mix", "estimator", "d_H", "sec");
    for r in rows {
        println!("{:<8} {:<16} {:>8.3} {:>8.4}", r.scenario, r.estimator, r.mean_d_h, r.mean_seconds);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
