//! Sequential monitoring of a stream against regime references.
//!
//! [`PdMonitor`] estimates the predictive density of each working window and
//! classifies it by minimum distance to reference densities. [`RankMonitor`]
//! tracks the depth-rank Wilcoxon statistic of each window against a fixed
//! reference sample. Both compare their statistic with bootstrap critical
//! values.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cde::{estimate_pd_pairs, estimate_pd_values, robust_grid, CdeConfig, DensityEstimate};
use crate::depth::{depth_all, DepthParams};
pub use crate::distance::{abs_dev, hellinger, kolmogorov, DistanceKind};
use crate::error::{invalid, Error, Result};
use crate::rank::{bootstrap_rank_critical_blocked, wilcoxon_statistic_with, RankBasis};
use crate::stats;
use crate::window::{lag_embed_values, LaggedPairs, Observation, Reference, ReferenceSet, Window};

/// Mean over condition rows of the row distance.
pub fn density_distance(a: &DensityEstimate, b: &DensityEstimate, kind: DistanceKind) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    let total = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(f, g)| kind.eval(f, g, &a.y_grid))
        .sum::<Result<f64>>()?;
    Ok(total / a.values.len() as f64)
}

/// Index of the nearest reference (lowest index on ties) and all distances.
pub fn classify(est: &DensityEstimate, refs: &[DensityEstimate], kind: DistanceKind) -> Result<(usize, Vec<f64>)> {
    if refs.is_empty() {
        return Err(Error::EmptySample);
    }
    let distances = refs.iter().map(|h| density_distance(est, h, kind)).collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, d) in distances.iter().enumerate() {
        if *d < distances[best] {
            best = k;
        }
    }
    Ok((best, distances))
}

/// Which exceedance raises a Proposal-1 alert.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertMode {
    /// Distance to the declared current regime exceeds its threshold.
    #[default]
    CurrentRegime,
    /// The smallest distance exceeds the threshold of the nearest reference.
    MinDistance,
}

impl std::str::FromStr for AlertMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "current_regime" => Ok(Self::CurrentRegime),
            "min_distance" => Ok(Self::MinDistance),
            other => Err(invalid(format!("unknown alert mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    /// Minimum-distance classification of predictive densities.
    #[default]
    Density,
    /// Moving depth-rank Wilcoxon statistic.
    Rank,
}

impl std::str::FromStr for Proposal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "density" => Ok(Self::Density),
            "2" | "rank" => Ok(Self::Rank),
            other => Err(invalid(format!("unknown proposal `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    pub proposal: Proposal,
    /// Working window length `n`.
    pub window: usize,
    pub stride: usize,
    pub cde: CdeConfig,
    pub distance: DistanceKind,
    /// Permit `abs_dev` for monitoring.
    pub allow_abs_dev: bool,
    pub alert_mode: AlertMode,
    /// Alert level `alpha`.
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Length of the fixed reference sample for the rank monitor.
    pub reference_len: usize,
    /// Points after the reference that form the rank bootstrap pool when
    /// both are taken from the monitored stream.
    pub calibration_len: usize,
    /// Depths for the rank monitor; the default ranks against the reference.
    pub rank_basis: RankBasis,
    /// Block length rule shared by both bootstraps.
    pub block: BlockRule,
    /// Initial declared regime for the density monitor.
    pub initial_regime: usize,
    /// Per-reference thresholds overriding the bootstrap.
    pub thresholds: Option<Vec<f64>>,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            proposal: Proposal::Density,
            window: 500,
            stride: 1,
            cde: CdeConfig::default(),
            distance: DistanceKind::Hellinger,
            allow_abs_dev: false,
            alert_mode: AlertMode::CurrentRegime,
            level: 0.05,
            replicates: 200,
            seed: 0,
            reference_len: 100,
            calibration_len: 2000,
            rank_basis: RankBasis::Second,
            block: BlockRule::Auto,
            initial_regime: 0,
            thresholds: None,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 50 {
            return Err(invalid(format!("window length n = {} must be >= 50", self.window)));
        }
        if self.stride == 0 {
            return Err(invalid("stride must be positive"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(invalid(format!("level alpha = {} outside (0, 1)", self.level)));
        }
        if self.replicates < 100 && self.thresholds.is_none() {
            return Err(invalid(format!("need at least 100 bootstrap replicates, got {}", self.replicates)));
        }
        if self.distance == DistanceKind::AbsDev && !self.allow_abs_dev {
            return Err(invalid("abs_dev is an evaluation distance; set allow_abs_dev to monitor with it"));
        }
        if self.reference_len == 0 {
            return Err(invalid("reference length must be positive"));
        }
        self.cde.validate()
    }

    /// Block length for resamples of a window, given the depth series of
    /// the calibration data.
    pub fn block_len(&self, depth_series: &[f64]) -> usize {
        self.block.length(self.window, depth_series)
    }
}

/// Block length of the circular block bootstraps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "len")]
pub enum BlockRule {
    /// `ceil(n^(1/3))`.
    CubeRoot,
    /// `n^(1/3)` times the Politis-White constant estimated from the
    /// calibration data.
    #[default]
    Auto,
    /// Fixed length; `1` resamples points independently.
    Fixed(usize),
}

impl BlockRule {
    pub fn length(self, n: usize, series: &[f64]) -> usize {
        let b = match self {
            BlockRule::CubeRoot => (n as f64).cbrt().ceil(),
            BlockRule::Auto => (optimal_block_constant(series) * (n as f64).cbrt()).ceil(),
            BlockRule::Fixed(len) => len as f64,
        };
        (b as usize).clamp(1, (n / 2).max(1))
    }
}

fn autocovariances(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let m = stats::mean(x);
    (0..=max_lag.min(n - 1))
        .map(|k| x.iter().zip(&x[k..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / n as f64)
        .collect()
}

/// Constant `(2 G^2 / D)^(1/3)` of the Politis-White optimal circular block
/// length `b = const * N^(1/3)`, with the flat-top lag window and the
/// automatic bandwidth rule. Returns 1 for series too short or constant.
pub fn optimal_block_constant(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 16 {
        return 1.0;
    }
    let nf = n as f64;
    let kn = (nf.log10().sqrt().ceil() as usize).max(5);
    let max_lag = ((nf.sqrt().ceil() as usize) + kn).min(n - 1);
    let acov = autocovariances(x, max_lag + kn);
    if !(acov[0] > 0.0) {
        return 1.0;
    }
    let rho: Vec<f64> = acov.iter().map(|c| c / acov[0]).collect();
    let bound = 2.0 * (nf.log10() / nf).sqrt();
    let last = rho.len() - 1;
    let m_hat = (0..=max_lag)
        .find(|&m| (1..=kn).all(|k| m + k > last || rho[m + k].abs() < bound))
        .unwrap_or(max_lag);
    let big_m = (2 * m_hat).clamp(1, max_lag);
    let flat_top = |t: f64| {
        let t = t.abs();
        if t <= 0.5 {
            1.0
        } else if t <= 1.0 {
            2.0 * (1.0 - t)
        } else {
            0.0
        }
    };
    let (mut g, mut s0) = (0.0, acov[0]);
    for k in 1..=big_m.min(last) {
        let w = flat_top(k as f64 / big_m as f64);
        g += 2.0 * w * k as f64 * acov[k];
        s0 += 2.0 * w * acov[k];
    }
    let d = 4.0 / 3.0 * s0 * s0;
    if !(d > 0.0) || g == 0.0 {
        return 1.0;
    }
    (2.0 * g * g / d).cbrt().max(1.0 / nf.cbrt())
}

/// One monitoring step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub end_index: u64,
    /// Nearest reference (density monitor only).
    pub psi: Option<usize>,
    /// Declared regime after this step (density monitor only).
    pub regime: Option<usize>,
    pub distances: Vec<f64>,
    pub zscore: Option<f64>,
    /// Depth-rank sum `S` of the window (rank monitor only).
    pub rank_sum: Option<f64>,
    pub threshold: f64,
    pub alert: bool,
    pub elapsed: f64,
}

/// Circular block bootstrap resample of length `n`.
pub fn circular_block_resample<T: Copy, R: Rng + ?Sized>(values: &[T], n: usize, block: usize, rng: &mut R) -> Vec<T> {
    let len = values.len();
    let block = block.max(1);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let start = rng.random_range(0..len);
        for j in 0..block.min(n - out.len()) {
            out.push(values[(start + j) % len]);
        }
    }
    out
}

/// Bootstrap critical value of the distance between an `n`-window estimate
/// and `reference_density`.
///
/// Blocks of consecutive lagged pairs of the reference are resampled
/// circularly, so every resampled pair is a genuine transition. Each
/// replicate holds as many pairs as an `n`-window. Replicate `r` runs on
/// ChaCha stream `r` of `seed`.
pub fn bootstrap_pd_critical(
    reference: &[f64],
    reference_density: &DensityEstimate,
    cfg: &MonitorConfig,
    cde: &CdeConfig,
) -> Result<f64> {
    if reference.len() < cfg.window {
        return Err(Error::InsufficientData { need: cfg.window, have: reference.len() });
    }
    let pairs = lag_embed_values(reference, cde.lag)?;
    let count = cfg.window.checked_sub(cde.lag).filter(|&c| c > 0).ok_or(Error::LagTooLarge {
        lag: cde.lag,
        len: cfg.window,
    })?;
    let block = match cfg.block {
        BlockRule::Auto => cfg.block_len(&depth_all(&pairs.pairs, &cde.depth)?),
        _ => cfg.block_len(&[]),
    };
    let stats: Vec<f64> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let sample = LaggedPairs { lag: cde.lag, pairs: circular_block_resample(&pairs.pairs, count, block, &mut rng) };
            let est = estimate_pd_pairs(&sample, cde)?;
            density_distance(&est, reference_density, cfg.distance)
        })
        .collect::<Result<_>>()?;
    Ok(stats::quantile(&stats, 1.0 - cfg.level))
}

pub trait Monitor {
    fn step(&mut self, window: &Window) -> Result<MonitorReport>;
}

/// Minimum-distance monitor of the predictive density.
#[derive(Clone, Debug)]
pub struct PdMonitor {
    cfg: MonitorConfig,
    cde: CdeConfig,
    references: Vec<DensityEstimate>,
    thresholds: Vec<f64>,
    current: usize,
}

impl PdMonitor {
    /// Densify sample references on a common grid and calibrate thresholds.
    ///
    /// The evaluation grid and condition points come from a density
    /// reference when one is present, else from the pooled reference samples.
    pub fn new(refs: &ReferenceSet, cfg: &MonitorConfig) -> Result<Self> {
        cfg.validate()?;
        let mut cde = cfg.cde.clone();
        match refs.entries().iter().find_map(|e| match e {
            Reference::Density(d) => Some(d),
            Reference::Sample(_) => None,
        }) {
            Some(d) => {
                cde.y_grid = Some(d.y_grid.clone());
                cde.conditions = Some(d.condition_points.clone());
            }
            None => {
                let pooled: Vec<f64> = refs
                    .entries()
                    .iter()
                    .filter_map(|e| match e {
                        Reference::Sample(w) => Some(w.scalars()),
                        Reference::Density(_) => None,
                    })
                    .collect::<Result<Vec<_>>>()?
                    .concat();
                if cde.y_grid.is_none() {
                    cde.y_grid = Some(robust_grid(&pooled, cde.grid_spread, cde.grid_points)?);
                }
                if cde.conditions.is_none() {
                    let sorted = stats::sorted_copy(&pooled);
                    let (lo, hi) = (stats::quantile_sorted(&sorted, 0.05), stats::quantile_sorted(&sorted, 0.95));
                    cde.conditions = Some(stats::linspace(lo, hi, cde.max_conditions));
                }
            }
        }
        let mut references = Vec::with_capacity(refs.len());
        let mut samples = Vec::with_capacity(refs.len());
        for entry in refs.entries() {
            match entry {
                Reference::Density(d) => {
                    references.push(d.clone());
                    samples.push(None);
                }
                Reference::Sample(w) => {
                    let values = w.scalars()?;
                    references.push(estimate_pd_values(&values, &cde)?);
                    samples.push(Some(values));
                }
            }
        }
        let thresholds = match &cfg.thresholds {
            Some(t) if t.len() == references.len() => t.clone(),
            Some(t) => {
                return Err(Error::LengthMismatch(format!(
                    "{} thresholds for {} references",
                    t.len(),
                    references.len()
                )))
            }
            None => references
                .iter()
                .zip(&samples)
                .enumerate()
                .map(|(k, (h, s))| {
                    let s = s.as_ref().ok_or_else(|| {
                        invalid(format!("reference {k} is a density; supply thresholds or a sample"))
                    })?;
                    let mut sub = cfg.clone();
                    sub.seed = cfg.seed.wrapping_add(k as u64);
                    bootstrap_pd_critical(s, h, &sub, &cde)
                })
                .collect::<Result<Vec<_>>>()?,
        };
        if cfg.initial_regime >= references.len() {
            return Err(invalid(format!("initial regime {} out of range", cfg.initial_regime)));
        }
        Ok(Self { cfg: cfg.clone(), cde, references, thresholds, current: cfg.initial_regime })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn references(&self) -> &[DensityEstimate] {
        &self.references
    }

    /// Pipeline configuration with the grids fixed to the references.
    pub fn cde(&self) -> &CdeConfig {
        &self.cde
    }

    pub fn current(&self) -> usize {
        self.current
    }

    /// Classify a window of scalar values.
    pub fn step_values(&mut self, end_index: u64, values: &[f64]) -> Result<MonitorReport> {
        let start = Instant::now();
        let est = estimate_pd_values(values, &self.cde)?;
        let (psi, distances) = classify(&est, &self.references, self.cfg.distance)?;
        let (alert, threshold) = match self.cfg.alert_mode {
            AlertMode::CurrentRegime => {
                let t = self.thresholds[self.current];
                (distances[self.current] > t, t)
            }
            AlertMode::MinDistance => {
                let t = self.thresholds[psi];
                (distances[psi] > t, t)
            }
        };
        if alert {
            self.current = psi;
        }
        Ok(MonitorReport {
            end_index,
            psi: Some(psi),
            regime: Some(self.current),
            distances,
            zscore: None,
            rank_sum: None,
            threshold,
            alert,
            elapsed: start.elapsed().as_secs_f64(),
        })
    }
}

impl Monitor for PdMonitor {
    fn step(&mut self, window: &Window) -> Result<MonitorReport> {
        let end = window.end_index().ok_or(Error::EmptySample)?;
        self.step_values(end, &window.scalars()?)
    }
}

/// Moving Wilcoxon monitor against a fixed reference sample.
#[derive(Clone, Debug)]
pub struct RankMonitor {
    reference: Vec<Vec<f64>>,
    threshold: f64,
    params: DepthParams,
    basis: RankBasis,
}

impl RankMonitor {
    /// `calibration` supplies the bootstrap pool; it must hold at least
    /// `window + reference.len()` points.
    pub fn new(reference: Vec<Vec<f64>>, calibration: &[Vec<f64>], cfg: &MonitorConfig) -> Result<Self> {
        cfg.validate()?;
        if reference.is_empty() {
            return Err(Error::EmptySample);
        }
        let threshold = match &cfg.thresholds {
            Some(t) => *t.first().ok_or_else(|| invalid("empty threshold list"))?,
            None => bootstrap_rank_critical_blocked(
                calibration,
                cfg.window,
                reference.len(),
                match cfg.block {
                    BlockRule::Auto => cfg.block_len(&depth_all(calibration, &cfg.cde.depth)?),
                    _ => cfg.block_len(&[]),
                },
                cfg.level,
                cfg.replicates,
                cfg.seed,
                &cfg.cde.depth,
                cfg.rank_basis,
            )?,
        };
        Ok(Self { reference, threshold, params: cfg.cde.depth, basis: cfg.rank_basis })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn step_points(&self, end_index: u64, points: &[Vec<f64>]) -> Result<MonitorReport> {
        let start = Instant::now();
        let w = wilcoxon_statistic_with(points, &self.reference, &self.params, self.basis)?;
        Ok(MonitorReport {
            end_index,
            psi: None,
            regime: None,
            distances: Vec::new(),
            zscore: Some(w.zscore),
            rank_sum: Some(w.s),
            threshold: self.threshold,
            alert: w.zscore.abs() > self.threshold,
            elapsed: start.elapsed().as_secs_f64(),
        })
    }
}

impl Monitor for RankMonitor {
    fn step(&mut self, window: &Window) -> Result<MonitorReport> {
        let end = window.end_index().ok_or(Error::EmptySample)?;
        self.step_points(end, &window.points())
    }
}

/// Slide a window of length `n` over the stream, stepping every `stride`
/// observations once the window is full. A stream shorter than `n` yields no
/// reports. Errors carry the stream position.
pub fn run_monitor<I, M>(stream: I, monitor: &mut M, n: usize, stride: usize) -> Result<Vec<MonitorReport>>
where
    I: IntoIterator<Item = Result<Observation>>,
    M: Monitor + ?Sized,
{
    if stride == 0 {
        return Err(invalid("stride must be positive"));
    }
    let mut window = Window::new(n)?;
    let mut reports = Vec::new();
    let mut seen = 0usize;
    for (pos, obs) in stream.into_iter().enumerate() {
        let obs = obs.map_err(|e| at_position(pos, e))?;
        window.push(obs).map_err(|e| at_position(pos, e))?;
        seen += 1;
        if seen >= n && (seen - n) % stride == 0 {
            reports.push(monitor.step(&window)?);
        }
    }
    Ok(reports)
}

fn at_position(pos: usize, e: Error) -> Error {
    match e {
        Error::Parse { .. } => e,
        other => Error::Parse { line: pos + 1, message: other.to_string() },
    }
}

/// Running count of steps whose declared regime differs from the truth.
pub fn cumulative_misclassification(reports: &[MonitorReport], truth: impl Fn(u64) -> usize) -> Vec<usize> {
    let mut acc = 0;
    reports
        .iter()
        .map(|r| {
            if r.regime.is_some_and(|q| q != truth(r.end_index)) {
                acc += 1;
            }
            acc
        })
        .collect()
}
