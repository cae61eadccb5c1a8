//! Weighted L^p depth of a few points, the depth median and a central region.

use std::error::Error;

use depthstream::depth::{central_region, depth_all, lp_median, weighted_lp_depth, DepthParams};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let params = DepthParams::default();
    let sample = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0], vec![4.0, 4.0]];

    for q in [[0.0, 0.0], [4.0, 4.0], [10.0, -10.0]] {
        let d = weighted_lp_depth(&q, &sample, &params)?;
        println!("D({q:?}) = {d:.4}");
    }

    let depths = depth_all(&sample, &params)?;
    println!("depths: {:?}", depths.iter().map(|d| format!("{d:.3}")).collect::<Vec<_>>());
    println!("median: {:?}", lp_median(&sample, &params)?);

    // everything at least as deep as the third deepest point
    let mut sorted = depths.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let region = central_region(&sample, &params, sorted[2])?;
    println!("central region members: {:?}", region.members);
    assert!(!region.contains(4));

    // L^1 depth in one dimension
    let l1 = DepthParams::new(1.0, 1.0, 1.0)?;
    let line: Vec<[f64; 1]> = (1..=4).map(|i| [i as f64]).collect();
    println!("D_1(2.5 | 1..4) = {:.4}", weighted_lp_depth(&[2.5], &line, &l1)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
