//! Depth-based robust binning of lagged pairs, compared with plain binning
//! when a few gross outliers are present.

use std::error::Error;

use depthstream::binning::{robust_bin, simple_bin, BetaMode};
use depthstream::depth::DepthParams;
use depthstream::io::{binned_meta, write_binned};
use depthstream::sim::{contaminate, simulate_setar, ContaminationSpec, InnovationSpec, SetarSpec};
use depthstream::window::lag_embed_values;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let spec = SetarSpec::two_regime(5.0, InnovationSpec::normal());
    let clean = simulate_setar(&spec, 800, 500, 4)?;
    let dirty = contaminate(&clean, &ContaminationSpec::additive(0.02, 60.0, 5.0), 9)?;
    let pairs = lag_embed_values(&dirty.values, 1)?;

    let robust = robust_bin(&pairs, &DepthParams::default(), 0.05, 30, BetaMode::TrimMass)?;
    let plain = simple_bin(&pairs, 30)?;
    println!(
        "robust grid [{:.2}, {:.2}], {} nonempty cells, {} pairs trimmed",
        robust.grid.lo(),
        robust.grid.hi(),
        robust.nonempty_cells(),
        robust.trimmed_count
    );
    println!("plain grid  [{:.2}, {:.2}], {} nonempty cells", plain.grid.lo(), plain.grid.hi(), plain.nonempty_cells());

    let mut csv = Vec::new();
    write_binned(&mut csv, &robust)?;
    println!("{} triplet rows; meta {}", String::from_utf8(csv)?.lines().count() - 1, binned_meta(&robust));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
