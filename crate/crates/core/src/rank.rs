//! DD-plots and the depth-rank multivariate Wilcoxon rank-sum statistic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::{depth_of, DepthParams};
use crate::error::{invalid, Error, Result};
use crate::stats;

/// Depth pairs for each point of the combined sample: first coordinate
/// w.r.t. the first sample, second w.r.t. the second.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DDPlot {
    pub points: Vec<(f64, f64)>,
    pub n: usize,
    pub m: usize,
}

impl DDPlot {
    /// Largest absolute distance of a point from the diagonal.
    pub fn max_gap(&self) -> f64 {
        self.points.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn check_dims<P: AsRef<[f64]>, Q: AsRef<[f64]>>(x: &[P], y: &[Q]) -> Result<()> {
    let dx = x.first().ok_or(Error::EmptySample)?.as_ref().len();
    let dy = y.first().ok_or(Error::EmptySample)?.as_ref().len();
    if dx != dy {
        return Err(Error::DimensionMismatch { expected: dx, got: dy });
    }
    Ok(())
}

fn combine<P: AsRef<[f64]>, Q: AsRef<[f64]>>(x: &[P], y: &[Q]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|p| p.as_ref().to_vec())
        .chain(y.iter().map(|q| q.as_ref().to_vec()))
        .collect()
}

pub fn dd_plot<P, Q>(x: &[P], y: &[Q], params: &DepthParams) -> Result<DDPlot>
where
    P: AsRef<[f64]> + Sync,
    Q: AsRef<[f64]> + Sync,
{
    check_dims(x, y)?;
    let z = combine(x, y);
    let dx = depth_of(&z, x, params)?;
    let dy = depth_of(&z, y, params)?;
    Ok(DDPlot { points: dx.into_iter().zip(dy).collect(), n: x.len(), m: y.len() })
}

/// Weak-inequality ranks: `rank[l] = #{j : depths[j] <= depths[l]}`.
/// Tied values all receive the largest rank of their tie group.
pub fn weak_ranks(depths: &[f64]) -> Vec<usize> {
    let sorted = stats::sorted_copy(depths);
    depths.iter().map(|d| sorted.partition_point(|s| s <= d)).collect()
}

/// Rank of `x` in `combined` by depth w.r.t. `combined`.
pub fn depth_rank<P: AsRef<[f64]> + Sync>(
    x: &[f64],
    combined: &[P],
    params: &DepthParams,
) -> Result<usize> {
    let pos = combined.iter().position(|z| z.as_ref() == x).ok_or(Error::NotInSample)?;
    let depths = depth_of(combined, combined, params)?;
    Ok(weak_ranks(&depths)[pos])
}

/// Which empirical distribution the depths used for ranking refer to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankBasis {
    #[default]
    Combined,
    First,
    Second,
}

impl std::str::FromStr for RankBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "combined" => Ok(Self::Combined),
            "first" => Ok(Self::First),
            "second" => Ok(Self::Second),
            other => Err(invalid(format!("unknown rank basis `{other}`"))),
        }
    }
}

/// Rank sum of the first sample and its null moments.
///
/// `m` is the size of the first sample (whose ranks are summed) and `n` the
/// size of the second, so `expected = m (m + n + 1) / 2` and
/// `variance = m n (m + n + 1) / 12`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub s: f64,
    pub m: usize,
    pub n: usize,
    pub expected: f64,
    pub variance: f64,
    pub zscore: f64,
}

impl WilcoxonResult {
    pub fn from_rank_sum(s: f64, m: usize, n: usize) -> Self {
        let (mf, nf) = (m as f64, n as f64);
        let expected = 0.5 * mf * (mf + nf + 1.0);
        let variance = mf * nf * (mf + nf + 1.0) / 12.0;
        let zscore = (s - expected) / variance.sqrt();
        Self { s, m, n, expected, variance, zscore }
    }
}

pub fn wilcoxon_statistic<P, Q>(x: &[P], y: &[Q], params: &DepthParams) -> Result<WilcoxonResult>
where
    P: AsRef<[f64]> + Sync,
    Q: AsRef<[f64]> + Sync,
{
    wilcoxon_statistic_with(x, y, params, RankBasis::Combined)
}

pub fn wilcoxon_statistic_with<P, Q>(
    x: &[P],
    y: &[Q],
    params: &DepthParams,
    basis: RankBasis,
) -> Result<WilcoxonResult>
where
    P: AsRef<[f64]> + Sync,
    Q: AsRef<[f64]> + Sync,
{
    check_dims(x, y)?;
    let z = combine(x, y);
    let depths = match basis {
        RankBasis::Combined => depth_of(&z, &z, params)?,
        RankBasis::First => depth_of(&z, x, params)?,
        RankBasis::Second => depth_of(&z, y, params)?,
    };
    let ranks = weak_ranks(&depths);
    let s: usize = ranks[..x.len()].iter().sum();
    Ok(WilcoxonResult::from_rank_sum(s as f64, x.len(), y.len()))
}

/// Bootstrap critical value for `|zscore|`.
///
/// Each of the `replicates` rounds draws a size-`m` and a size-`n` sample
/// with replacement from `reference` and records `|z|`; the result is the
/// `1 - level` empirical quantile. Replicate `r` uses the ChaCha stream `r`
/// of `seed`, so the output does not depend on thread scheduling.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_rank_critical<P: AsRef<[f64]> + Sync>(
    reference: &[P],
    m: usize,
    n: usize,
    level: f64,
    replicates: usize,
    seed: u64,
    params: &DepthParams,
    basis: RankBasis,
) -> Result<f64> {
    bootstrap_rank_critical_blocked(reference, m, n, 1, level, replicates, seed, params, basis)
}

/// As [`bootstrap_rank_critical`], drawing each sample as a concatenation
/// of circular blocks of `block` consecutive reference points. `block = 1`
/// is the plain resampling.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_rank_critical_blocked<P: AsRef<[f64]> + Sync>(
    reference: &[P],
    m: usize,
    n: usize,
    block: usize,
    level: f64,
    replicates: usize,
    seed: u64,
    params: &DepthParams,
    basis: RankBasis,
) -> Result<f64> {
    if m == 0 || n == 0 || block == 0 {
        return Err(invalid("bootstrap sample sizes and block length must be positive"));
    }
    if reference.len() < m + n {
        return Err(Error::InsufficientData { need: m + n, have: reference.len() });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("level = {level} outside (0, 1)")));
    }
    if replicates < 100 {
        return Err(invalid(format!("need at least 100 bootstrap replicates, got {replicates}")));
    }
    let len = reference.len();
    let stats: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut draw = |k: usize| -> Vec<&[f64]> {
                let mut out = Vec::with_capacity(k);
                while out.len() < k {
                    let start = rng.random_range(0..len);
                    for j in 0..block.min(k - out.len()) {
                        out.push(reference[(start + j) % len].as_ref());
                    }
                }
                out
            };
            let xs = draw(m);
            let ys = draw(n);
            wilcoxon_statistic_with(&xs, &ys, params, basis).map(|w| w.zscore.abs())
        })
        .collect::<Result<_>>()?;
    Ok(stats::quantile(&stats, 1.0 - level))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: DepthParams = DepthParams { p: 2.0, a: 1.0, b: 1.0 };

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn moments_for_small_sizes() {
        let w = WilcoxonResult::from_rank_sum(6.0, 2, 3);
        assert_eq!(w.expected, 6.0);
        assert_eq!(w.variance, 3.0);
        assert_eq!(w.zscore, 0.0);
    }

    #[test]
    fn symmetric_pair_ties() {
        let w = wilcoxon_statistic(&pts(&[0.0]), &pts(&[10.0]), &P).unwrap();
        assert_eq!(w.s, 2.0);
        let combined = pts(&[0.0, 10.0]);
        assert_eq!(depth_rank(&[0.0], &combined, &P).unwrap(), 2);
        assert_eq!(depth_rank(&[10.0], &combined, &P).unwrap(), 2);
        assert!(matches!(depth_rank(&[5.0], &combined, &P), Err(Error::NotInSample)));
    }

    #[test]
    fn shallowest_point_ranks_first() {
        let combined = pts(&[0.0, 1.0, 2.0, 50.0]);
        assert_eq!(depth_rank(&[50.0], &combined, &P).unwrap(), 1);
    }

    #[test]
    fn weak_ranks_with_ties() {
        assert_eq!(weak_ranks(&[0.3, 0.1, 0.3, 0.2]), vec![4, 1, 4, 2]);
    }

    #[test]
    fn dd_plot_hand_values() {
        // z = 0: w.r.t. {0, 2} mean w = (1 + 3) / 2; w.r.t. {10, 12} mean w = (11 + 13) / 2
        let dd = dd_plot(&pts(&[0.0, 2.0]), &pts(&[10.0, 12.0]), &P).unwrap();
        assert_eq!(dd.points.len(), 4);
        assert!((dd.points[0].0 - 1.0 / 3.0).abs() < 1e-15);
        assert!((dd.points[0].1 - 1.0 / 13.0).abs() < 1e-15);
        let same = dd_plot(&pts(&[0.0, 2.0, 3.0]), &pts(&[0.0, 2.0, 3.0]), &P).unwrap();
        assert!(same.points.iter().all(|(a, b)| a == b));
    }

    #[test]
    fn dimension_mismatch() {
        let x = vec![vec![0.0, 1.0]];
        let y = pts(&[0.0]);
        assert!(matches!(dd_plot(&x, &y, &P), Err(Error::DimensionMismatch { .. })));
        assert!(wilcoxon_statistic(&x, &y, &P).is_err());
    }

    #[test]
    fn bootstrap_is_deterministic_and_validates() {
        let reference: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64 * 0.7).sin()]).collect();
        let a = bootstrap_rank_critical(&reference, 20, 20, 0.05, 200, 7, &P, RankBasis::Combined)
            .unwrap();
        let b = bootstrap_rank_critical(&reference, 20, 20, 0.05, 200, 7, &P, RankBasis::Combined)
            .unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
        assert!(bootstrap_rank_critical(&reference, 40, 40, 0.05, 200, 7, &P, RankBasis::Combined)
            .is_err());
        assert!(bootstrap_rank_critical(&reference, 20, 20, 0.05, 50, 7, &P, RankBasis::Combined)
            .is_err());
    }

    #[test]
    fn bootstrap_threshold_shrinks_as_level_grows() {
        let reference: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64 * 0.7).sin()]).collect();
        let hi = bootstrap_rank_critical(&reference, 20, 20, 0.05, 200, 1, &P, RankBasis::Combined)
            .unwrap();
        let lo = bootstrap_rank_critical(&reference, 20, 20, 0.999, 200, 1, &P, RankBasis::Combined)
            .unwrap();
        assert!(lo < hi);
        assert!(lo < 0.05);
    }
}
