//! Distances between densities on a shared grid.

use std::error::Error;

use depthstream::cde::normal_pdf;
use depthstream::distance::DistanceKind;
use depthstream::stats::linspace;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let grid = linspace(-8.0, 8.0, 801);
    let f: Vec<f64> = grid.iter().map(|&y| normal_pdf(y, 0.0, 1.0)).collect();
    for shift in [0.0, 0.5, 1.0, 2.0] {
        let g: Vec<f64> = grid.iter().map(|&y| normal_pdf(y, shift, 1.0)).collect();
        let row: Vec<String> = [DistanceKind::Hellinger, DistanceKind::Kolmogorov, DistanceKind::AbsDev]
            .iter()
            .map(|k| k.eval(&f, &g, &grid).map(|d| format!("{d:.4}")))
            .collect::<Result<_, _>>()?;
        println!("shift {shift}: hellinger {} kolmogorov {} abs_dev {}", row[0], row[1], row[2]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
