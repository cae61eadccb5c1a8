//! Library results against independent reference computations.

use depthstream::binning::{robust_bin, BetaMode};
use depthstream::cde::{bandwidth_rot, gaussian_kernel, local_poly_cde, Bandwidths};
use depthstream::depth::{depth_all, lp_median, weighted_lp_depth, DepthParams};
use depthstream::rank::{dd_plot, depth_rank, wilcoxon_statistic};
use depthstream::window::lag_embed_values;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const P: DepthParams = DepthParams { p: 2.0, a: 1.0, b: 1.0 };

fn naive_depth(z: &[f64], sample: &[Vec<f64>], par: &DepthParams) -> f64 {
    let mut total = 0.0;
    for x in sample {
        let mut s = 0.0;
        for (a, b) in z.iter().zip(x) {
            s += (a - b).abs().powf(par.p);
        }
        total += par.a + par.b * s.powf(1.0 / par.p);
    }
    1.0 / (1.0 + total / sample.len() as f64)
}

#[test]
fn depth_all_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (d, p) in [(1, 2.0), (3, 1.0), (4, 3.5)] {
        let sample: Vec<Vec<f64>> = (0..150).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let par = DepthParams::new(p, 0.5, 2.0).unwrap();
        let fast = depth_all(&sample, &par).unwrap();
        for (j, z) in sample.iter().enumerate() {
            assert!((fast[j] - naive_depth(z, &sample, &par)).abs() <= 1e-12);
        }
    }
}

#[test]
fn hand_evaluated_depths() {
    let s = [[0.0], [2.0]];
    assert!((weighted_lp_depth(&[1.0], &s, &P).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!((weighted_lp_depth(&[5.0], &s, &P).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert_eq!(depth_all(&s, &P).unwrap(), vec![1.0 / 3.0; 2]);
    assert_eq!(lp_median(&[[0.0], [1.0], [10.0]], &P).unwrap(), vec![1.0]);

    let dd = dd_plot(&[[0.0], [2.0]], &[[10.0], [12.0]], &P).unwrap();
    assert!((dd.points[0].0 - 1.0 / 3.0).abs() < 1e-15);
    assert!((dd.points[0].1 - 1.0 / 13.0).abs() < 1e-15);

    assert_eq!(depth_rank(&[0.0], &[[0.0], [10.0]], &P).unwrap(), 2);
    let w = wilcoxon_statistic(&[[0.0]], &[[10.0]], &P).unwrap();
    assert_eq!(w.s, 2.0);
    let w = wilcoxon_statistic(&[[0.0], [1.0]], &[[2.0], [3.0], [4.0]], &P).unwrap();
    assert_eq!((w.expected, w.variance), (6.0, 3.0));
}

fn kernel(u: f64, h: f64) -> f64 {
    (-(u / h).powi(2) / 2.0).exp() / (h * (2.0 * std::f64::consts::PI).sqrt())
}

#[test]
fn kernel_constant_and_symmetry() {
    assert!((gaussian_kernel(0.0, 1.0).unwrap() - 0.398_942_280_4).abs() < 1e-10);
    assert_eq!(gaussian_kernel(0.7, 0.3).unwrap(), gaussian_kernel(-0.7, 0.3).unwrap());
    assert!(gaussian_kernel(0.0, 0.0).is_err());
}

/// Local fits on random binned AR(1) samples against a weighted
/// least-squares solve by SVD. Conditions stay off the edge cells so the
/// quadratic design is well posed.
#[test]
fn local_fit_matches_dense_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..100 {
        let n = 150 + trial * 5;
        let mut x = 0.0;
        let values: Vec<f64> = (0..n)
            .map(|_| {
                x = 0.6 * x + rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect();
        let pairs = lag_embed_values(&values, 1).unwrap();
        let m = rng.random_range(10..25);
        let binned = robust_bin(&pairs, &P, 0.05, m, BetaMode::TrimMass).unwrap();
        let cells: Vec<(f64, f64, f64)> = binned.cells().map(|(a, b, c)| (a, b, c as f64)).collect();
        let hx = bandwidth_rot(&pairs.xs()).unwrap();
        let hy = bandwidth_rot(&pairs.ys()).unwrap();
        let bw = Bandwidths::new(hx, hy).unwrap();
        let (lo, hi) = (binned.grid.lo(), binned.grid.hi());
        let span = hi - lo;
        let at = rng.random_range(lo + 0.1 * span..hi - 0.1 * span);
        let y = rng.random_range(lo..hi);

        let w: Vec<f64> = cells.iter().map(|&(xi, _, c)| c * kernel(xi - at, hx)).collect();
        let resp: Vec<f64> = cells.iter().map(|&(_, yi, _)| kernel(yi - y, hy)).collect();

        let avg = w.iter().zip(&resp).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>();
        let fit0 = local_poly_cde(&binned, at, y, 0, &bw).unwrap();
        assert!((fit0.theta0 - avg).abs() <= 1e-12, "r = 0: {} vs {avg}", fit0.theta0);

        for r in 1..=2 {
            let k = r + 1;
            let a = DMatrix::from_fn(cells.len(), k, |i, j| w[i].sqrt() * (cells[i].0 - at).powi(j as i32));
            let b = DVector::from_fn(cells.len(), |i, _| w[i].sqrt() * resp[i]);
            let theta = a.svd(true, true).solve(&b, 1e-300).unwrap();
            let fit = local_poly_cde(&binned, at, y, r, &bw).unwrap();
            assert!(!fit.fallback, "trial {trial} r {r} m {m} hx {hx} at {at} lo {lo} hi {hi} pos {}", w.iter().filter(|&&v| v > 0.0).count());
            assert!((fit.theta0 - theta[0]).abs() <= 1e-10, "r = {r}: {} vs {}", fit.theta0, theta[0]);
        }
    }
}

#[test]
fn single_support_point_interpolates() {
    let pairs = lag_embed_values(&[1.0, 1.0, 1.0, 1.0], 1).unwrap();
    let support = depthstream::cde::Support::from_pairs(&pairs);
    let bw = Bandwidths::new(0.5, 0.5).unwrap();
    for r in 0..=2 {
        let fit = depthstream::cde::local_poly_fit(&support, 0.3, 1.4, r, &bw).unwrap();
        assert!((fit.theta0 - kernel(1.0 - 1.4, 0.5)).abs() < 1e-12);
        assert_eq!(fit.fallback, r > 0);
    }
}
