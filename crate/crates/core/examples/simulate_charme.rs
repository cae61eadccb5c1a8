//! A two-regime hidden-Markov mixture of SETAR models, its regime occupancy
//! and contaminated variants.

use std::error::Error;

use depthstream::io::write_trajectory;
use depthstream::sim::{
    contaminate, simulate_charme, CharmeSpec, ContaminationSpec, InnovationSpec, SetarSpec, SubModel,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inn = InnovationSpec::student_t(3.0);
    let spec = CharmeSpec {
        models: vec![SubModel::Setar(SetarSpec::two_regime(5.0, inn)), SubModel::Setar(SetarSpec::two_regime(10.0, inn))],
        transition: vec![vec![0.98, 0.02], vec![0.04, 0.96]],
        initial: 0,
    };
    spec.validate()?;
    let traj = simulate_charme(&spec, 20_000, 1000, 17)?;
    println!("stationary {:?}", spec.stationary());
    println!("occupancy  {:?}", traj.occupancy(2));

    let ao = contaminate(&traj, &ContaminationSpec::additive_relative(0.05, 0.0, 3.0), 1)?;
    let io = contaminate(&traj, &ContaminationSpec::inliers(0.05), 2)?;
    let frac = |t: &depthstream::sim::Trajectory| t.contaminated.iter().filter(|&&c| c).count() as f64 / t.len() as f64;
    println!("AO share {:.4}, IO share {:.4}", frac(&ao), frac(&io));

    let mut csv = Vec::new();
    write_trajectory(&mut csv, &ao)?;
    println!("{}", String::from_utf8(csv)?.lines().take(4).collect::<Vec<_>>().join("\n"));

    let bad = CharmeSpec { transition: vec![vec![0.9, 0.0], vec![0.5, 0.5]], ..spec };
    println!("invalid spec: {}", bad.validate().unwrap_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
