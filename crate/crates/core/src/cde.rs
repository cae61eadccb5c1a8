//! Conditional (predictive) density estimation on lagged pairs.
//!
//! The estimator is the local polynomial fit of kernel-smoothed responses
//! `K_hy(Y - y)` on powers of `(X - x)` with weights `K_hx(X - x)` times the
//! bin frequency. The nonnegative variant fits the same criterion through an
//! exponential link and reports `exp(theta_0)`.
//!
//! Estimation runs on a [`Support`]: weighted points that are either raw
//! pairs (weight 1) or the nonempty cells of a [`BinnedSample`].

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{robust_bin, simple_bin, BetaMode, BinnedSample};
use crate::depth::DepthParams;
use crate::error::{invalid, Error, Result};
use crate::stats::{self, linspace, trapezoid};
use crate::window::{lag_embed_values, LaggedPairs, Window};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const MAX_DEGREE: usize = 2;

/// Gaussian kernel `K_h(u) = phi(u / h) / h`.
pub fn gaussian_kernel(u: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid(format!("bandwidth h = {h} must be > 0")));
    }
    Ok(kernel(u, h))
}

#[inline]
fn kernel(u: f64, h: f64) -> f64 {
    let t = u / h;
    INV_SQRT_2PI / h * (-0.5 * t * t).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bandwidths {
    pub hx: f64,
    pub hy: f64,
}

impl Bandwidths {
    pub fn new(hx: f64, hy: f64) -> Result<Self> {
        let bw = Self { hx, hy };
        bw.validate()?;
        Ok(bw)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hx > 0.0 && self.hx.is_finite() && self.hy > 0.0 && self.hy.is_finite()) {
            return Err(invalid(format!("bandwidths ({}, {}) must be finite and > 0", self.hx, self.hy)));
        }
        Ok(())
    }
}

/// Robust rule-of-thumb bandwidth
/// `0.9 * min(sd, IQR / 1.349, MAD / 0.6745) * n^(-1/5)`,
/// ignoring scale estimates that vanish.
pub fn bandwidth_rot(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientData { need: 2, have: values.len() });
    }
    let scales = [
        stats::sd(values),
        stats::iqr(values) / 1.349,
        stats::mad_raw(values) / 0.6745,
    ];
    let scale = scales.into_iter().filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
    if !scale.is_finite() {
        return Err(Error::ZeroScale);
    }
    Ok(0.9 * scale * (values.len() as f64).powf(-0.2))
}

/// Exponential link with the exponent clamped to `[-700, 700]`.
pub fn link_positive(theta0: f64) -> f64 {
    theta0.clamp(-700.0, 700.0).exp()
}

/// Weighted points the local fits run over.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Support {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Support {
    pub fn from_pairs(pairs: &LaggedPairs) -> Self {
        Self { xs: pairs.xs(), ys: pairs.ys(), weights: vec![1.0; pairs.len()] }
    }

    pub fn from_binned(binned: &BinnedSample) -> Self {
        let mut s = Support::default();
        for (x, y, c) in binned.cells() {
            s.xs.push(x);
            s.ys.push(y);
            s.weights.push(c as f64);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Intercept of a local fit and whether the requested degree had to be
/// reduced to 0 because the normal equations were singular.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFit {
    pub theta0: f64,
    pub fallback: bool,
}

/// Local kernel weights `w_i K_hx(x_i - x)`, rescaled so the largest
/// Gaussian factor is 1. The scaling cancels in every weighted least-squares
/// solve and keeps far-away conditions from underflowing. Factors below
/// `1e-17` of the largest are set to zero.
fn local_weights(support: &Support, x: f64, hx: f64) -> Vec<f64> {
    let min_t2 = support
        .xs
        .iter()
        .map(|&xi| ((xi - x) / hx).powi(2))
        .fold(f64::INFINITY, f64::min);
    support
        .xs
        .iter()
        .zip(&support.weights)
        .map(|(&xi, &w)| {
            let e = 0.5 * (((xi - x) / hx).powi(2) - min_t2);
            if e > WEIGHT_CUTOFF {
                0.0
            } else {
                w * (-e).exp()
            }
        })
        .collect()
}

/// `-ln(1e-17)`.
const WEIGHT_CUTOFF: f64 = 39.14;

/// Support points with positive weight at one condition value, their scaled
/// regressors and the weighted normal matrix of the linear fit.
struct Design {
    w: Vec<f64>,
    phi: Vec<Vector>,
    ys: Vec<f64>,
    k: usize,
    gram: Mat,
}

impl Design {
    fn new(support: &Support, u: &[f64], x: f64, r: usize, hx: f64) -> Self {
        let k = r + 1;
        let mut d = Design { w: Vec::new(), phi: Vec::new(), ys: Vec::new(), k, gram: Default::default() };
        for i in 0..support.len() {
            if u[i] > 0.0 {
                let phi = powers((support.xs[i] - x) / hx, k);
                for p in 0..k {
                    for q in 0..k {
                        d.gram[p][q] += u[i] * phi[p] * phi[q];
                    }
                }
                d.w.push(u[i]);
                d.phi.push(phi);
                d.ys.push(support.ys[i]);
            }
        }
        d
    }

    fn responses(&self, y: f64, hy: f64) -> Vec<f64> {
        self.ys.iter().map(|&yi| kernel(yi - y, hy)).collect()
    }

    fn eta(&self, theta: &Vector, i: usize) -> f64 {
        (0..self.k).map(|j| theta[j] * self.phi[i][j]).sum::<f64>().clamp(-700.0, 700.0)
    }

    /// Criterion value and fitted means under the log link.
    fn log_objective(&self, theta: &Vector, resp: &[f64], mu: &mut [f64]) -> f64 {
        let mut q = 0.0;
        for i in 0..self.w.len() {
            mu[i] = self.eta(theta, i).exp();
            let d = resp[i] - mu[i];
            if d.abs() > NEGLIGIBLE {
                q += self.w[i] * d * d;
            }
        }
        q
    }
}

type Mat = [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1];
type Vector = [f64; MAX_DEGREE + 1];

/// Gaussian elimination with partial pivoting on the leading `k x k`
/// block. Returns `None` when a pivot is negligible relative to the
/// matrix scale.
fn solve(mut a: Mat, mut b: Vector, k: usize) -> Option<Vector> {
    let scale = (0..k).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-11 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; MAX_DEGREE + 1];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[inline]
fn powers(t: f64, k: usize) -> Vector {
    let mut phi = [0.0; MAX_DEGREE + 1];
    phi[0] = 1.0;
    for j in 1..k {
        phi[j] = phi[j - 1] * t;
    }
    phi
}

fn check_degree(r: usize) -> Result<()> {
    if r > MAX_DEGREE {
        return Err(invalid(format!("polynomial degree {r} not in {{0, 1, 2}}")));
    }
    Ok(())
}

/// Linear local polynomial fit at `(x, y)`.
fn linear_fit(design: &Design, resp: &[f64]) -> LocalFit {
    let k = design.k;
    let mut b: Vector = Default::default();
    for i in 0..design.w.len() {
        for p in 0..k {
            b[p] += design.w[i] * design.phi[i][p] * resp[i];
        }
    }
    let a = design.gram;
    match solve(a, b, k) {
        // regressors are scaled by 1/hx, which leaves the intercept unchanged
        Some(theta) => LocalFit { theta0: theta[0], fallback: false },
        None => LocalFit { theta0: b[0] / a[0][0], fallback: k > 1 },
    }
}

/// Local polynomial conditional density estimate at `(x, y)` from binned
/// data: the intercept of the weighted least-squares fit.
pub fn local_poly_cde(
    binned: &BinnedSample,
    x: f64,
    y: f64,
    r: usize,
    bw: &Bandwidths,
) -> Result<LocalFit> {
    local_poly_fit(&Support::from_binned(binned), x, y, r, bw)
}

pub fn local_poly_fit(support: &Support, x: f64, y: f64, r: usize, bw: &Bandwidths) -> Result<LocalFit> {
    check_degree(r)?;
    bw.validate()?;
    if support.is_empty() || support.total_weight() <= 0.0 {
        return Err(Error::EmptyBinnedSample);
    }
    let u = local_weights(support, x, bw.hx);
    let design = Design::new(support, &u, x, r, bw.hx);
    Ok(linear_fit(&design, &design.responses(y, bw.hy)))
}

/// Nonnegative local polynomial estimate: minimises the same weighted
/// criterion with the polynomial passed through `exp`, by damped
/// Gauss-Newton iterations started from the local-constant fit.
/// Returns `exp(theta_0)`.
pub fn constrained_local_poly_fit(
    support: &Support,
    x: f64,
    y: f64,
    r: usize,
    bw: &Bandwidths,
) -> Result<LocalFit> {
    check_degree(r)?;
    bw.validate()?;
    if support.is_empty() || support.total_weight() <= 0.0 {
        return Err(Error::EmptyBinnedSample);
    }
    let u = local_weights(support, x, bw.hx);
    let design = Design::new(support, &u, x, r, bw.hx);
    Ok(constrained_fit(&design, &design.responses(y, bw.hy), None).0)
}

/// Local-constant values below this are returned as is; the log fit would
/// only work on subnormal numbers.
const TINY_DENSITY: f64 = 1e-100;
/// Terms below this are dropped from the log-link criterion and gradient.
const NEGLIGIBLE: f64 = 1e-150;
/// Fits whose optimum lies at infinity (far tails) stop here.
const MAX_ITER: usize = 40;

/// Fit plus the log-scale coefficients to warm-start a neighbouring `y`.
fn constrained_fit(design: &Design, resp: &[f64], warm: Option<&Vector>) -> (LocalFit, Option<Vector>) {
    match constrained_theta(design, resp, warm) {
        ConstrainedFit::Closed(c) => (LocalFit { theta0: c, fallback: false }, None),
        ConstrainedFit::Singular(c) => (LocalFit { theta0: c, fallback: true }, None),
        ConstrainedFit::Log(theta) => (LocalFit { theta0: link_positive(theta[0]), fallback: false }, Some(theta)),
    }
}

enum ConstrainedFit {
    /// Local-constant value, exact for degree 0 and for vanishing responses.
    Closed(f64),
    /// Normal equations singular; local-constant value.
    Singular(f64),
    /// Log-scale coefficients on regressors scaled by `1 / hx`.
    Log(Vector),
}

fn constrained_theta(design: &Design, resp: &[f64], warm: Option<&Vector>) -> ConstrainedFit {
    let k = design.k;
    let sw = design.gram[0][0];
    let swr: f64 = design.w.iter().zip(resp).map(|(w, r)| w * r).sum();
    let c0 = swr / sw;
    if k == 1 || !(c0 > TINY_DENSITY) {
        return ConstrainedFit::Closed(c0.max(0.0));
    }
    let n = design.w.len();
    let mut mu = vec![0.0; n];
    let mut mu_cand = vec![0.0; n];
    let mut theta: Vector = [0.0; MAX_DEGREE + 1];
    theta[0] = c0.ln();
    let mut q = design.log_objective(&theta, resp, &mut mu);
    if let Some(w) = warm {
        let qw = design.log_objective(w, resp, &mut mu_cand);
        if qw < q {
            theta = *w;
            q = qw;
            std::mem::swap(&mut mu, &mut mu_cand);
        }
    }
    let mut damping = 1e-6;
    for _ in 0..MAX_ITER {
        let mut h: Mat = Default::default();
        let mut g: Vector = Default::default();
        for i in 0..n {
            let (w, phi, m) = (design.w[i], &design.phi[i], mu[i]);
            if m < NEGLIGIBLE {
                continue;
            }
            for p in 0..k {
                g[p] += w * m * phi[p] * (resp[i] - m);
                for s in 0..k {
                    h[p][s] += w * m * m * phi[p] * phi[s];
                }
            }
        }
        let mut accepted = None;
        while damping < 1e12 {
            let mut hd = h;
            for (p, row) in hd.iter_mut().enumerate().take(k) {
                row[p] *= 1.0 + damping;
            }
            let Some(delta) = solve(hd, g, k) else {
                return ConstrainedFit::Singular(c0);
            };
            let mut cand = theta;
            for j in 0..k {
                cand[j] += delta[j];
            }
            let qc = design.log_objective(&cand, resp, &mut mu_cand);
            if qc <= q {
                accepted = Some((cand, qc, delta));
                damping = (damping * 0.1).max(1e-12);
                break;
            }
            damping *= 10.0;
        }
        let Some((cand, qc, delta)) = accepted else { break };
        let step = (0..k).map(|j| delta[j].abs()).fold(0.0, f64::max);
        let rel = (q - qc) / q.max(f64::MIN_POSITIVE);
        theta = cand;
        q = qc;
        std::mem::swap(&mut mu, &mut mu_cand);
        if step < 1e-7 || rel < 1e-10 {
            break;
        }
    }
    ConstrainedFit::Log(theta)
}

/// How the lagged pairs are reduced before fitting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinningMode {
    /// Depth-based robust binning, extreme classes dropped.
    #[default]
    Robust,
    /// Plain binning over the full range, nothing dropped.
    Simple,
    /// Raw pairs.
    None,
}

/// Configuration of the predictive density pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CdeConfig {
    pub lag: usize,
    pub beta: f64,
    pub m: usize,
    pub beta_mode: BetaMode,
    pub degree: usize,
    pub binning: BinningMode,
    pub depth: DepthParams,
    pub bandwidths: Option<Bandwidths>,
    pub normalize: bool,
    pub link: bool,
    /// Fixed evaluation grid; derived from the window when absent.
    pub y_grid: Option<Vec<f64>>,
    pub grid_points: usize,
    pub grid_spread: f64,
    /// Fixed condition points; derived from the window when absent.
    pub conditions: Option<Vec<f64>>,
    pub max_conditions: usize,
}

impl Default for CdeConfig {
    fn default() -> Self {
        Self {
            lag: 1,
            beta: 0.05,
            m: 100,
            beta_mode: BetaMode::TrimMass,
            degree: 1,
            binning: BinningMode::Robust,
            depth: DepthParams::default(),
            bandwidths: None,
            normalize: true,
            link: true,
            y_grid: None,
            grid_points: 500,
            grid_spread: 5.0,
            conditions: None,
            max_conditions: 20,
        }
    }
}

impl CdeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lag == 0 {
            return Err(invalid("lag must be positive"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(invalid(format!("beta = {} outside (0, 1)", self.beta)));
        }
        if self.m < 3 {
            return Err(invalid(format!("m = {} must be >= 3", self.m)));
        }
        check_degree(self.degree)?;
        self.depth.validate()?;
        if let Some(bw) = &self.bandwidths {
            bw.validate()?;
        }
        if self.y_grid.is_none() && self.grid_points < 2 {
            return Err(invalid("evaluation grid needs at least 2 points"));
        }
        if let Some(g) = &self.y_grid {
            check_equal_spacing(g)?;
        }
        if !(self.grid_spread > 0.0) {
            return Err(invalid("grid spread must be > 0"));
        }
        if self.conditions.is_none() && self.max_conditions == 0 {
            return Err(invalid("need at least one condition point"));
        }
        Ok(())
    }
}

fn check_equal_spacing(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(invalid("evaluation grid needs at least 2 points"));
    }
    let dx = grid[1] - grid[0];
    if !(dx > 0.0) {
        return Err(invalid("evaluation grid must be increasing"));
    }
    let tol = 1e-9 * dx.max(grid[grid.len() - 1].abs());
    if grid.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > tol) {
        return Err(invalid("evaluation grid must be equally spaced"));
    }
    Ok(())
}

/// `[Med - A MAD, Med + A MAD]` with `points` equally spaced points; MAD is
/// normal-consistent.
pub fn robust_grid(values: &[f64], spread: f64, points: usize) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let med = stats::median(values);
    let mad = stats::mad(values);
    if !(mad > 0.0) {
        return Err(Error::ZeroMad);
    }
    Ok(linspace(med - spread * mad, med + spread * mad, points))
}

/// Up to `max` entries of `points`, evenly spread over its index range.
pub fn subsample_evenly(points: &[f64], max: usize) -> Vec<f64> {
    if points.len() <= max {
        return points.to_vec();
    }
    if max == 1 {
        return vec![points[points.len() / 2]];
    }
    (0..max)
        .map(|i| points[(i as f64 * (points.len() - 1) as f64 / (max - 1) as f64).round() as usize])
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeta {
    pub degree: usize,
    pub bandwidths: Bandwidths,
    pub beta: f64,
    pub m: usize,
    pub beta_mode: BetaMode,
    pub binning: BinningMode,
    pub normalize: bool,
    pub link: bool,
    pub depth: DepthParams,
    pub support_points: usize,
    pub trimmed_count: u64,
    pub fallback_count: usize,
}

/// Density rows `values[l][g]` of the response at `y_grid[g]` given
/// `condition_points[l]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub condition_points: Vec<f64>,
    pub y_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub normalized: bool,
    pub meta: Option<EstimateMeta>,
}

impl DensityEstimate {
    pub fn new(condition_points: Vec<f64>, y_grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_equal_spacing(&y_grid)?;
        if values.len() != condition_points.len() || values.iter().any(|r| r.len() != y_grid.len()) {
            return Err(Error::LengthMismatch("density values do not match the grids".into()));
        }
        Ok(Self { condition_points, y_grid, values, normalized: false, meta: None })
    }

    pub fn spacing(&self) -> f64 {
        self.y_grid[1] - self.y_grid[0]
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.values[l]
    }

    pub fn row_integrals(&self) -> Vec<f64> {
        let dx = self.spacing();
        self.values.iter().map(|r| trapezoid(r, dx)).collect()
    }

    /// Rescale every row to unit mass. A row with no mass on the grid is
    /// left at zero and the estimate is then not marked normalized.
    pub fn normalize(&mut self) {
        let dx = self.spacing();
        let mut all = true;
        for row in &mut self.values {
            let total = trapezoid(row, dx);
            if total > 0.0 && total.is_finite() {
                row.iter_mut().for_each(|v| *v /= total);
            } else {
                all = false;
            }
        }
        self.normalized = all;
    }

    /// Same condition points and evaluation grid, up to rounding.
    pub fn same_grid(&self, other: &DensityEstimate) -> bool {
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs()))
        };
        close(&self.y_grid, &other.y_grid) && close(&self.condition_points, &other.condition_points)
    }
}

/// Predictive density of a one-dimensional window.
pub fn estimate_pd(window: &Window, cfg: &CdeConfig) -> Result<DensityEstimate> {
    estimate_pd_values(&window.scalars()?, cfg)
}

pub fn estimate_pd_values(values: &[f64], cfg: &CdeConfig) -> Result<DensityEstimate> {
    cfg.validate()?;
    if values.len() <= cfg.lag + 10 {
        return Err(Error::InsufficientData { need: cfg.lag + 11, have: values.len() });
    }
    let pairs = lag_embed_values(values, cfg.lag)?;
    estimate_core(&pairs, values, cfg)
}

/// Predictive density from lagged pairs directly. Without a fixed
/// `y_grid` the grid is derived from the responses.
pub fn estimate_pd_pairs(pairs: &LaggedPairs, cfg: &CdeConfig) -> Result<DensityEstimate> {
    cfg.validate()?;
    if pairs.len() < 10 {
        return Err(Error::InsufficientData { need: 10, have: pairs.len() });
    }
    estimate_core(pairs, &pairs.ys(), cfg)
}

fn estimate_core(pairs: &LaggedPairs, values: &[f64], cfg: &CdeConfig) -> Result<DensityEstimate> {
    let (support, default_conditions, trimmed) = match cfg.binning {
        BinningMode::Robust => {
            let binned = robust_bin(&pairs, &cfg.depth, cfg.beta, cfg.m, cfg.beta_mode)?;
            let conds = subsample_evenly(&binned.midpoints_x, cfg.max_conditions);
            (Support::from_binned(&binned), conds, binned.trimmed_count)
        }
        BinningMode::Simple => {
            let binned = simple_bin(&pairs, cfg.m)?;
            let conds = subsample_evenly(&binned.midpoints_x, cfg.max_conditions);
            (Support::from_binned(&binned), conds, 0)
        }
        BinningMode::None => {
            let xs = pairs.xs();
            let s = stats::sorted_copy(&xs);
            let (lo, hi) = (stats::quantile_sorted(&s, 0.05), stats::quantile_sorted(&s, 0.95));
            let conds = linspace(lo, hi, cfg.max_conditions);
            (Support::from_pairs(&pairs), conds, 0)
        }
    };
    let bandwidths = match cfg.bandwidths {
        Some(bw) => bw,
        None => Bandwidths::new(bandwidth_rot(&pairs.xs())?, bandwidth_rot(&pairs.ys())?)?,
    };
    let y_grid = match &cfg.y_grid {
        Some(g) => g.clone(),
        None => robust_grid(values, cfg.grid_spread, cfg.grid_points)?,
    };
    let conditions = cfg.conditions.clone().unwrap_or(default_conditions);
    if conditions.is_empty() {
        return Err(invalid("no condition points"));
    }

    let rows: Vec<(Vec<f64>, usize)> = conditions
        .par_iter()
        .map(|&x| {
            let u = local_weights(&support, x, bandwidths.hx);
            let design = Design::new(&support, &u, x, cfg.degree, bandwidths.hx);
            let mut fallbacks = 0;
            let mut warm: Option<Vector> = None;
            let row = y_grid
                .iter()
                .map(|&y| {
                    let resp = design.responses(y, bandwidths.hy);
                    let fit = if cfg.link {
                        let (fit, theta) = constrained_fit(&design, &resp, warm.as_ref());
                        if theta.is_some() {
                            warm = theta;
                        }
                        fit
                    } else {
                        let f = linear_fit(&design, &resp);
                        LocalFit { theta0: f.theta0.max(0.0), ..f }
                    };
                    fallbacks += fit.fallback as usize;
                    fit.theta0
                })
                .collect();
            (row, fallbacks)
        })
        .collect();

    let fallback_count = rows.iter().map(|r| r.1).sum();
    let values_matrix = rows.into_iter().map(|r| r.0).collect();
    let mut est = DensityEstimate::new(conditions, y_grid, values_matrix)?;
    if cfg.normalize {
        est.normalize();
    }
    est.meta = Some(EstimateMeta {
        degree: cfg.degree,
        bandwidths,
        beta: cfg.beta,
        m: cfg.m,
        beta_mode: cfg.beta_mode,
        binning: cfg.binning,
        normalize: cfg.normalize,
        link: cfg.link,
        depth: cfg.depth,
        support_points: support.len(),
        trimmed_count: trimmed,
        fallback_count,
    });
    Ok(est)
}

/// Conditional distribution function estimate at one condition value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfEstimate {
    pub x: f64,
    pub y_grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// Nadaraya-Watson weighted empirical conditional distribution function.
pub fn conditional_cdf_nw(pairs: &[[f64; 2]], x: f64, y_grid: &[f64], h: f64) -> Result<CdfEstimate> {
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(h > 0.0) {
        return Err(invalid(format!("bandwidth h = {h} must be > 0")));
    }
    let w: Vec<f64> = pairs.iter().map(|p| kernel(p[0] - x, h)).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::OutsideSupport);
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&i, &j| pairs[i][1].total_cmp(&pairs[j][1]));
    let mut values = Vec::with_capacity(y_grid.len());
    for &y in y_grid {
        let below: f64 = order
            .iter()
            .take_while(|&&i| pairs[i][1] <= y)
            .map(|&i| w[i])
            .sum();
        values.push((below / total).min(1.0));
    }
    // cumulative sums can wobble by one ulp; enforce monotonicity exactly
    for i in 1..values.len() {
        if values[i] < values[i - 1] {
            values[i] = values[i - 1];
        }
    }
    Ok(CdfEstimate { x, y_grid: y_grid.to_vec(), values })
}

/// Normal density, used by tests and truth densities.
pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::{bin2d, Grid2D};

    fn support(points: &[(f64, f64, f64)]) -> Support {
        Support {
            xs: points.iter().map(|p| p.0).collect(),
            ys: points.iter().map(|p| p.1).collect(),
            weights: points.iter().map(|p| p.2).collect(),
        }
    }

    #[test]
    fn empty_row_blocks_normalized_flag() {
        let grid = linspace(0.0, 1.0, 11);
        let mut est = DensityEstimate::new(vec![0.0, 1.0], grid, vec![vec![2.0; 11], vec![0.0; 11]]).unwrap();
        est.normalize();
        assert!(!est.normalized);
        assert!((est.row_integrals()[0] - 1.0).abs() < 1e-12);
        est.values[1] = vec![1.0; 11];
        est.normalize();
        assert!(est.normalized);
    }

    #[test]
    fn kernel_constants() {
        assert!((gaussian_kernel(0.0, 1.0).unwrap() - 0.398_942_280_4).abs() < 1e-10);
        assert_eq!(gaussian_kernel(0.7, 0.3).unwrap(), gaussian_kernel(-0.7, 0.3).unwrap());
        assert!(gaussian_kernel(0.0, 0.0).is_err());
        let h = 0.37;
        let xs = linspace(-8.0 * h, 8.0 * h, 4001);
        let ys: Vec<f64> = xs.iter().map(|&u| kernel(u, h)).collect();
        assert!((trapezoid(&ys, xs[1] - xs[0]) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rot_equivariance() {
        let xs: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64).sqrt()).collect();
        let h = bandwidth_rot(&xs).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|x| 3.0 * x).collect();
        let shifted: Vec<f64> = xs.iter().map(|x| x - 17.0).collect();
        assert!((bandwidth_rot(&scaled).unwrap() - 3.0 * h).abs() < 1e-12);
        assert!((bandwidth_rot(&shifted).unwrap() - h).abs() < 1e-12);
        assert!(matches!(bandwidth_rot(&[2.0; 10]), Err(Error::ZeroScale)));
    }

    #[test]
    fn rot_skips_vanishing_mad() {
        // more than half the values equal: MAD = 0 but sd and IQR are not
        let mut xs = vec![1.0; 60];
        xs.extend((0..40).map(|i| i as f64));
        assert!(bandwidth_rot(&xs).unwrap() > 0.0);
    }

    #[test]
    fn link_is_positive_and_monotone() {
        assert_eq!(link_positive(0.0), 1.0);
        assert!(link_positive(-1e6) > 0.0);
        assert!(link_positive(1e6).is_finite());
        assert!(link_positive(-0.5) < link_positive(0.25));
    }

    #[test]
    fn degree_zero_is_weighted_kernel_average() {
        let s = support(&[(0.0, 1.0, 3.0), (0.5, -0.2, 1.0), (1.4, 0.3, 2.0), (-0.8, 0.9, 5.0)]);
        let bw = Bandwidths::new(0.6, 0.4).unwrap();
        let (x, y) = (0.2, 0.5);
        let num: f64 = (0..4).map(|i| s.weights[i] * kernel(s.xs[i] - x, bw.hx) * kernel(s.ys[i] - y, bw.hy)).sum();
        let den: f64 = (0..4).map(|i| s.weights[i] * kernel(s.xs[i] - x, bw.hx)).sum();
        let fit = local_poly_fit(&s, x, y, 0, &bw).unwrap();
        assert!((fit.theta0 - num / den).abs() < 1e-12);
        let c = constrained_local_poly_fit(&s, x, y, 0, &bw).unwrap();
        assert!((c.theta0 - num / den).abs() < 1e-12);
    }

    #[test]
    fn single_support_point_interpolates() {
        let g = Grid2D::new(0.0, 4.0, 5).unwrap();
        let z = LaggedPairs { lag: 1, pairs: vec![[1.5, 2.5]; 7] };
        let b = bin2d(&z, &g);
        let bw = Bandwidths::new(0.5, 0.8).unwrap();
        for r in 0..=2 {
            let fit = local_poly_cde(&b, 0.3, 1.0, r, &bw).unwrap();
            assert!((fit.theta0 - kernel(2.5 - 1.0, 0.8)).abs() < 1e-14);
            assert_eq!(fit.fallback, r > 0);
        }
    }

    #[test]
    fn degree_out_of_range() {
        let s = support(&[(0.0, 0.0, 1.0)]);
        let bw = Bandwidths::new(1.0, 1.0).unwrap();
        assert!(local_poly_fit(&s, 0.0, 0.0, 3, &bw).is_err());
    }

    #[test]
    fn constrained_fit_is_a_local_minimum() {
        let pts: Vec<(f64, f64, f64)> = (0..40)
            .map(|i| {
                let x = -2.0 + 0.1 * i as f64;
                (x, 0.5 * x + ((i * 7) % 5) as f64 * 0.1, 1.0 + (i % 3) as f64)
            })
            .collect();
        let s = support(&pts);
        let bw = Bandwidths::new(0.5, 0.3).unwrap();
        let (x, y) = (0.3, 0.4);
        let u = local_weights(&s, x, bw.hx);
        let crit = |theta: [f64; 2]| -> f64 {
            (0..s.len())
                .map(|i| {
                    let t = (s.xs[i] - x) / bw.hx;
                    u[i] * (kernel(s.ys[i] - y, bw.hy) - (theta[0] + theta[1] * t).exp()).powi(2)
                })
                .sum()
        };
        let design = Design::new(&s, &u, x, 1, bw.hx);
        let ConstrainedFit::Log(theta) = constrained_theta(&design, &design.responses(y, bw.hy), None) else {
            panic!("expected an iterative fit");
        };
        let best = crit([theta[0], theta[1]]);
        for d0 in [-1e-3, 0.0, 1e-3] {
            for d1 in [-1e-3, 0.0, 1e-3] {
                assert!(best <= crit([theta[0] + d0, theta[1] + d1]) * (1.0 + 1e-9));
            }
        }
        let c0 = local_poly_fit(&s, x, y, 0, &bw).unwrap().theta0;
        assert!(best <= crit([c0.ln(), 0.0]));
    }

    #[test]
    fn cdf_saturates_and_is_monotone() {
        let pairs = [[0.0, 1.0], [0.1, 2.0], [0.2, 3.0], [5.0, -1.0]];
        let grid = linspace(-3.0, 6.0, 50);
        let cdf = conditional_cdf_nw(&pairs, 0.1, &grid, 0.5).unwrap();
        assert_eq!(cdf.values[0], 0.0);
        assert!((cdf.values[49] - 1.0).abs() < 1e-15);
        assert!(cdf.values.windows(2).all(|w| w[0] <= w[1]));

        let single = conditional_cdf_nw(&[[0.5, 2.0]], 0.5, &[1.0, 2.0, 3.0], 1.0).unwrap();
        assert_eq!(single.values, vec![0.0, 1.0, 1.0]);

        assert!(matches!(
            conditional_cdf_nw(&pairs, 1e6, &grid, 0.1),
            Err(Error::OutsideSupport)
        ));
    }

    #[test]
    fn grid_helpers() {
        assert_eq!(subsample_evenly(&[1.0, 2.0, 3.0], 5), vec![1.0, 2.0, 3.0]);
        let pts: Vec<f64> = (0..99).map(|i| i as f64).collect();
        let sub = subsample_evenly(&pts, 20);
        assert_eq!(sub.len(), 20);
        assert_eq!((sub[0], sub[19]), (0.0, 98.0));
        assert!(matches!(robust_grid(&[1.0; 5], 5.0, 10), Err(Error::ZeroMad)));
        assert!(check_equal_spacing(&[0.0, 1.0, 2.5]).is_err());
    }
}

