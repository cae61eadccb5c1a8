//! Minimum-distance regime monitor on predictive densities: a stream leaves
//! the low-level AR-GARCH regime for the high-level one.

use std::error::Error;

use depthstream::cde::CdeConfig;
use depthstream::monitor::{run_monitor, MonitorConfig, PdMonitor};
use depthstream::sim::{simulate_schedule, ArGarchSpec, InnovationSpec, SubModel};
use depthstream::window::{Observation, ReferenceSet, Window};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inn = InnovationSpec::normal();
    let models = [SubModel::ArGarch(ArGarchSpec::low_level(inn)), SubModel::ArGarch(ArGarchSpec::high_level(inn))];
    let low = simulate_schedule(&models, &vec![0; 1500], 1000, 1)?;
    let high = simulate_schedule(&models, &vec![1; 1500], 1000, 2)?;
    let refs = ReferenceSet::from_samples(vec![Window::from_scalars(&low.values)?, Window::from_scalars(&high.values)?])?;

    let cfg = MonitorConfig {
        window: 300,
        stride: 50,
        replicates: 200,
        cde: CdeConfig { grid_points: 60, max_conditions: 5, ..Default::default() },
        ..Default::default()
    };
    let mut monitor = PdMonitor::new(&refs, &cfg)?;
    println!("thresholds {:?}", monitor.thresholds());

    let change = 400;
    let labels: Vec<usize> = (0..900).map(|t| usize::from(t >= change)).collect();
    let stream = simulate_schedule(&models, &labels, 1000, 6)?;
    let obs = stream.values.iter().enumerate().map(|(i, &v)| Ok(Observation::scalar(i as u64, v)));
    for r in run_monitor(obs, &mut monitor, cfg.window, cfg.stride)? {
        let d: Vec<String> = r.distances.iter().map(|d| format!("{d:.3}")).collect();
        println!("t = {:>3}  psi = {:?}  regime = {:?}  d = {:?}  alert = {}", r.end_index, r.psi, r.regime, d, r.alert);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
