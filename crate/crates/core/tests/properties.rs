use depthstream::depth::{central_region, depth_all, DepthParams};
use depthstream::distance::{abs_dev, hellinger, kolmogorov};
use depthstream::rank::{weak_ranks, wilcoxon_statistic_with, RankBasis};
use depthstream::cde::conditional_cdf_nw;
use depthstream::sim::{contaminate, simulate_ar_garch, ArGarchSpec, ContaminationSpec, InnovationSpec};
use depthstream::stats::linspace;
use depthstream::window::{lag_embed_values, Observation, Window};
use proptest::prelude::*;

/// Points on a 1/8 lattice so shifted distances are computed exactly.
fn lattice_points(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec((-80i32..80).prop_map(|k| k as f64 / 8.0), d), 2..40)
}

fn params() -> impl Strategy<Value = DepthParams> {
    (prop_oneof![Just(1.0), Just(2.0), 1.0..4.0f64], 0.0..3.0f64, 0.1..3.0f64)
        .prop_map(|(p, a, b)| DepthParams::new(p, a, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn depth_is_bounded(sample in lattice_points(2), par in params()) {
        for d in depth_all(&sample, &par).unwrap() {
            prop_assert!(d > 0.0 && d <= 1.0 / (1.0 + par.a));
        }
    }

    #[test]
    fn depth_translation_invariant(sample in lattice_points(3), shift in prop::collection::vec(-20i32..20, 3)) {
        let par = DepthParams::new(1.0, 1.0, 1.0).unwrap();
        let moved: Vec<Vec<f64>> = sample
            .iter()
            .map(|x| x.iter().zip(&shift).map(|(a, s)| a + *s as f64).collect())
            .collect();
        prop_assert_eq!(depth_all(&sample, &par).unwrap(), depth_all(&moved, &par).unwrap());
    }

    #[test]
    fn depth_rotation_invariant_for_p2(sample in lattice_points(2), angle in 0.0..std::f64::consts::TAU) {
        let par = DepthParams::new(2.0, 1.0, 1.0).unwrap();
        let (s, c) = angle.sin_cos();
        let turned: Vec<Vec<f64>> = sample.iter().map(|x| vec![c * x[0] - s * x[1], s * x[0] + c * x[1]]).collect();
        for (a, b) in depth_all(&sample, &par).unwrap().iter().zip(depth_all(&turned, &par).unwrap()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn central_regions_nest(sample in lattice_points(2), a1 in 0.0..0.5f64, a2 in 0.0..0.5f64) {
        let par = DepthParams::default();
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let outer = central_region(&sample, &par, lo).unwrap();
        let inner = central_region(&sample, &par, hi).unwrap();
        prop_assert!(inner.members.iter().all(|&i| outer.contains(i)));
    }

    #[test]
    fn weak_ranks_count_shallower_points(depths in prop::collection::vec((0i32..6).prop_map(|k| k as f64 / 10.0), 1..30)) {
        let ranks = weak_ranks(&depths);
        for (j, &r) in ranks.iter().enumerate() {
            prop_assert_eq!(r, depths.iter().filter(|&&d| d <= depths[j]).count());
        }
    }

    #[test]
    fn rank_sum_invariant_to_permutation(
        x in lattice_points(1),
        y in lattice_points(1),
        seed in any::<u64>(),
    ) {
        let par = DepthParams::default();
        let mut shuffled = y.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed.rotate_left(i as u32) % (i as u64 + 1)) as usize);
        }
        for basis in [RankBasis::Combined, RankBasis::First, RankBasis::Second] {
            let a = wilcoxon_statistic_with(&x, &y, &par, basis).unwrap();
            let b = wilcoxon_statistic_with(&x, &shuffled, &par, basis).unwrap();
            prop_assert_eq!(a.s, b.s);
        }
    }

    #[test]
    fn window_keeps_last_values(cap in 1usize..20, values in prop::collection::vec(-1e3..1e3f64, 0..60)) {
        let mut w = Window::new(cap).unwrap();
        for (i, &v) in values.iter().enumerate() {
            w.push(Observation::scalar(i as u64, v)).unwrap();
            prop_assert_eq!(w.len(), (i + 1).min(cap));
        }
        let start = values.len().saturating_sub(cap);
        prop_assert_eq!(w.scalars().unwrap(), values[start..].to_vec());
    }

    #[test]
    fn lag_embedding_pairs(values in prop::collection::vec(-10.0..10.0f64, 2..50), k in 1usize..4) {
        prop_assume!(values.len() > k);
        let pairs = lag_embed_values(&values, k).unwrap();
        prop_assert_eq!(pairs.len(), values.len() - k);
        prop_assert_eq!(pairs.xs(), values[..values.len() - k].to_vec());
        prop_assert_eq!(pairs.ys(), values[k..].to_vec());
    }

    #[test]
    fn conditional_cdf_is_monotone(
        pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..60),
        x in -3.0..3.0f64,
    ) {
        let pairs: Vec<[f64; 2]> = pts.iter().map(|&(a, b)| [a, b]).collect();
        let grid = linspace(-6.0, 6.0, 40);
        if let Ok(cdf) = conditional_cdf_nw(&pairs, x, &grid, 1.0) {
            prop_assert!(cdf.values.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(cdf.values.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((cdf.values[39] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn distances_symmetric_and_bounded(
        mf in -2.0..2.0f64, sf in 0.5..2.0f64, mg in -2.0..2.0f64, sg in 0.5..2.0f64,
    ) {
        let grid = linspace(-15.0, 15.0, 3001);
        let f: Vec<f64> = grid.iter().map(|&y| depthstream::cde::normal_pdf(y, mf, sf)).collect();
        let g: Vec<f64> = grid.iter().map(|&y| depthstream::cde::normal_pdf(y, mg, sg)).collect();
        let h = hellinger(&f, &g, &grid).unwrap();
        prop_assert!((h - hellinger(&g, &f, &grid).unwrap()).abs() < 1e-14);
        prop_assert!((0.0..=1.0 + 1e-9).contains(&h));
        let k = kolmogorov(&f, &g, &grid).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&k));
        prop_assert!((abs_dev(&f, &g, &grid).unwrap() - abs_dev(&g, &f, &grid).unwrap()).abs() < 1e-14);
        prop_assert!(hellinger(&f, &f, &grid).unwrap() < 1e-7);
    }

    #[test]
    fn zero_contamination_is_identity(seed in any::<u64>()) {
        let traj = simulate_ar_garch(&ArGarchSpec::low_level(InnovationSpec::normal()), 200, 100, seed).unwrap();
        for spec in [ContaminationSpec::additive(0.0, 5.0, 1.0), ContaminationSpec::inliers(0.0)] {
            let out = contaminate(&traj, &spec, seed).unwrap();
            prop_assert_eq!(&out.values, &traj.values);
            prop_assert!(out.contaminated.iter().all(|c| !c));
        }
    }
}
