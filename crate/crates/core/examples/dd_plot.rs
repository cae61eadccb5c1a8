//! DD-plot of two samples: identical samples sit on the diagonal, a
//! location shift pushes mass off it.

use std::error::Error;

use depthstream::depth::DepthParams;
use depthstream::io::write_dd_plot;
use depthstream::rank::dd_plot;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian(n: usize, shift: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).unwrap();
    (0..n).map(|_| vec![z.sample(&mut rng) + shift, z.sample(&mut rng)]).collect()
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let params = DepthParams::default();
    let x = gaussian(200, 0.0, 1);

    let same = dd_plot(&x, &x, &params)?;
    println!("identical samples: max |D_x - D_y| = {:.2e}", same.max_gap());

    let shifted = dd_plot(&x, &gaussian(200, 2.0, 2), &params)?;
    println!("shift of 2: max |D_x - D_y| = {:.3}", shifted.max_gap());

    let mut csv = Vec::new();
    write_dd_plot(&mut csv, &shifted)?;
    let text = String::from_utf8(csv)?;
    println!("{}", text.lines().take(3).collect::<Vec<_>>().join("\n"));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
