//! Kernel-weighted conditional distribution function of the next value.

use std::error::Error;

use depthstream::cde::{bandwidth_rot, conditional_cdf_nw};
use depthstream::sim::{simulate_ar_garch, ArGarchSpec, InnovationSpec};
use depthstream::stats::linspace;
use depthstream::window::lag_embed_values;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let traj = simulate_ar_garch(&ArGarchSpec::low_level(InnovationSpec::normal()), 1000, 1000, 5)?;
    let pairs = lag_embed_values(&traj.values, 1)?;
    let h = bandwidth_rot(&pairs.xs())?;
    let grid = linspace(-20.0, 30.0, 11);
    for x in [2.0, 5.5, 10.0] {
        let cdf = conditional_cdf_nw(&pairs.pairs, x, &grid, h)?;
        let row: Vec<String> = cdf.values.iter().map(|v| format!("{v:.2}")).collect();
        println!("F(y | x = {x:>4}) = {}", row.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
