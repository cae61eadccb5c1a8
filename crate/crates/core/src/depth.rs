//! Weighted L^p depth and the geometric objects derived from it: the
//! sample L^p median, alpha-central regions and the smallest region holding
//! a prescribed mass.
//!
//! With weight `w(x) = a + b x` the empirical depth of `z` is
//! `1 / (1 + mean_i w(|z - x_i|_p))`. The depth is translation invariant and,
//! for `p = 2`, rotation invariant, but not affine invariant.
//!
//! Evaluating the depth of every sample point costs `O(n^2 d)`; the outer
//! loop runs on the rayon pool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Norm order and weight-function coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthParams {
    pub p: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for DepthParams {
    fn default() -> Self {
        Self { p: 2.0, a: 1.0, b: 1.0 }
    }
}

impl DepthParams {
    pub fn new(p: f64, a: f64, b: f64) -> Result<Self> {
        let params = Self { p, a, b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(invalid(format!("depth norm order p = {} must be >= 1", self.p)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid(format!("weight intercept a = {} must be > 0", self.a)));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(invalid(format!("weight slope b = {} must be > 0", self.b)));
        }
        Ok(())
    }

    #[inline]
    pub fn weight(&self, dist: f64) -> f64 {
        self.a + self.b * dist
    }

    /// Largest attainable empirical depth, reached only at zero distance
    /// to every sample point.
    pub fn max_depth(&self) -> f64 {
        1.0 / (1.0 + self.a)
    }

    #[inline]
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        lp_distance(x, y, self.p)
    }
}

#[inline]
pub fn lp_distance(x: &[f64], y: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    } else if p == 1.0 {
        x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
    } else {
        x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn check_sample<P: AsRef<[f64]>>(sample: &[P]) -> Result<usize> {
    let first = sample.first().ok_or(Error::EmptySample)?;
    let d = first.as_ref().len();
    if d == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    for x in sample {
        if x.as_ref().len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.as_ref().len() });
        }
    }
    Ok(d)
}

fn depth_unchecked<P: AsRef<[f64]>>(z: &[f64], sample: &[P], params: &DepthParams) -> f64 {
    let total: f64 = sample.iter().map(|x| params.weight(params.distance(z, x.as_ref()))).sum();
    1.0 / (1.0 + total / sample.len() as f64)
}

/// Empirical weighted L^p depth of `z` with respect to `sample`.
pub fn weighted_lp_depth<P: AsRef<[f64]>>(
    z: &[f64],
    sample: &[P],
    params: &DepthParams,
) -> Result<f64> {
    params.validate()?;
    let d = check_sample(sample)?;
    if z.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: z.len() });
    }
    Ok(depth_unchecked(z, sample, params))
}

/// Depth of each query point with respect to `sample`.
pub fn depth_of<Q, P>(queries: &[Q], sample: &[P], params: &DepthParams) -> Result<Vec<f64>>
where
    Q: AsRef<[f64]> + Sync,
    P: AsRef<[f64]> + Sync,
{
    params.validate()?;
    let d = check_sample(sample)?;
    if let Some(q) = queries.iter().find(|q| q.as_ref().len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: q.as_ref().len() });
    }
    Ok(queries.par_iter().map(|q| depth_unchecked(q.as_ref(), sample, params)).collect())
}

/// Depth of every sample point with respect to the sample itself.
pub fn depth_all<P: AsRef<[f64]> + Sync>(sample: &[P], params: &DepthParams) -> Result<Vec<f64>> {
    depth_of(sample, sample, params)
}

/// Index of the deepest value, lowest index on ties.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Sample point of maximal depth (ties go to the lowest index).
pub fn lp_median<P: AsRef<[f64]> + Sync>(sample: &[P], params: &DepthParams) -> Result<Vec<f64>> {
    let depths = depth_all(sample, params)?;
    Ok(sample[argmax_first(&depths)].as_ref().to_vec())
}

/// Subset of a sample selected by a depth threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralRegion {
    pub alpha: f64,
    /// Indices into the sample, ascending.
    pub members: Vec<usize>,
}

impl CentralRegion {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    pub fn points<P: AsRef<[f64]>>(&self, sample: &[P]) -> Vec<Vec<f64>> {
        self.members.iter().map(|&i| sample[i].as_ref().to_vec()).collect()
    }
}

/// Region of the points whose depth is at least `alpha`, from precomputed depths.
pub fn central_region_from_depths(depths: &[f64], alpha: f64) -> CentralRegion {
    let members = depths
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= alpha)
        .map(|(i, _)| i)
        .collect();
    CentralRegion { alpha, members }
}

pub fn central_region<P: AsRef<[f64]> + Sync>(
    sample: &[P],
    params: &DepthParams,
    alpha: f64,
) -> Result<CentralRegion> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok(central_region_from_depths(&depth_all(sample, params)?, alpha))
}

/// Smallest central region with empirical mass at least `beta`.
///
/// The `ceil(beta n)` deepest points are kept; every point tied with the
/// shallowest kept one is kept as well, so the mass can exceed `beta`.
pub fn smallest_region_from_depths(depths: &[f64], beta: f64) -> Result<CentralRegion> {
    if depths.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("beta = {beta} outside (0, 1]")));
    }
    let n = depths.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| depths[j].total_cmp(&depths[i]).then(i.cmp(&j)));
    // absorb rounding noise in beta * n before the ceiling
    let keep = ((beta * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let alpha = depths[order[keep - 1]];
    Ok(central_region_from_depths(depths, alpha))
}

pub fn smallest_region_beta<P: AsRef<[f64]> + Sync>(
    sample: &[P],
    params: &DepthParams,
    beta: f64,
) -> Result<CentralRegion> {
    smallest_region_from_depths(&depth_all(sample, params)?, beta)
}
