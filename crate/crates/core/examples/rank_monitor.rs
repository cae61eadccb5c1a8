//! Moving depth-rank Wilcoxon monitor on a bivariate stream whose spread
//! grows halfway through.

use std::error::Error;

use depthstream::monitor::{run_monitor, MonitorConfig, Proposal, RankMonitor};
use depthstream::window::Observation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let z = Normal::new(0.0, 1.0)?;
    let mut point = |scale: f64| vec![scale * z.sample(&mut rng), scale * z.sample(&mut rng)];
    let history: Vec<Vec<f64>> = (0..700).map(|_| point(1.0)).collect();
    let live: Vec<Vec<f64>> = (0..400).map(|t| point(if t < 200 { 1.0 } else { 2.0 })).collect();

    let cfg = MonitorConfig { proposal: Proposal::Rank, window: 60, stride: 20, replicates: 200, seed: 4, ..Default::default() };
    let mut monitor = RankMonitor::new(history[..100].to_vec(), &history[100..], &cfg)?;
    println!("critical |z| = {:.3}", monitor.threshold());

    let obs = live.into_iter().enumerate().map(|(i, p)| Ok(Observation::new(i as u64, p)));
    for r in run_monitor(obs, &mut monitor, cfg.window, cfg.stride)? {
        println!("t = {:>3}  S = {:>6.0}  z = {:+.2}  alert = {}", r.end_index, r.rank_sum.unwrap(), r.zscore.unwrap(), r.alert);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
