//! Depth-based robust 2D binning of lagged windows.
//!
//! The grid square `[l_1, l_m]^2` is fitted to a central depth region of
//! the lagged pairs; pairs falling into the extreme classes `(-inf, l_1)` or
//! `[l_m, inf)` on either axis are dropped. Bins are left-closed and
//! right-open.

use serde::{Deserialize, Serialize};

use crate::depth::{depth_all, smallest_region_from_depths, DepthParams};
use crate::error::{invalid, Error, Result};
use crate::stats::linspace;
use crate::window::LaggedPairs;

/// How `beta` maps to the mass of the central region the grid must cover.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    /// Cover the deepest `1 - beta` of the pairs (`beta` is the trimmed share).
    #[default]
    TrimMass,
    /// Cover the deepest `beta` of the pairs.
    CentralMass,
}

impl BetaMode {
    pub fn covered_mass(self, beta: f64) -> f64 {
        match self {
            BetaMode::TrimMass => 1.0 - beta,
            BetaMode::CentralMass => beta,
        }
    }
}

impl std::str::FromStr for BetaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trim_mass" => Ok(Self::TrimMass),
            "central_mass" => Ok(Self::CentralMass),
            other => Err(invalid(format!("unknown beta mode `{other}`"))),
        }
    }
}

/// Equally spaced edges shared by both axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    edges: Vec<f64>,
}

impl Grid2D {
    pub fn new(lo: f64, hi: f64, m: usize) -> Result<Self> {
        if m < 3 {
            return Err(invalid(format!("grid needs at least 3 edges, got {m}")));
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(invalid("grid bounds must be finite"));
        }
        if hi <= lo {
            return Err(Error::ZeroWidthGrid);
        }
        Ok(Self { edges: linspace(lo, hi, m) })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn spacing(&self) -> f64 {
        (self.hi() - self.lo()) / (self.m() - 1) as f64
    }

    /// The `m - 1` interior midpoints.
    pub fn midpoints(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Interior bin of `v` (0-based) or `None` for the extreme classes.
    pub fn interior_bin(&self, v: f64) -> Option<usize> {
        if v < self.lo() || v >= self.hi() {
            return None;
        }
        let j = ((v - self.lo()) / self.spacing()).floor() as usize;
        // guard the floor against rounding across an edge
        let mut j = j.min(self.m() - 2);
        if v < self.edges[j] {
            j -= 1;
        } else if v >= self.edges[j + 1] {
            j += 1;
        }
        Some(j)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningMeta {
    pub beta: f64,
    pub m: usize,
    pub beta_mode: BetaMode,
    pub trimmed_count: usize,
}

/// Interior bin frequencies after dropping the extreme classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedSample {
    pub midpoints_x: Vec<f64>,
    pub midpoints_y: Vec<f64>,
    /// `joint_counts[i][j]`: pairs with x in interior bin `i`, y in bin `j`.
    pub joint_counts: Vec<Vec<u64>>,
    pub marginal_y: Vec<u64>,
    pub total_interior: u64,
    pub trimmed_count: u64,
    pub grid: Grid2D,
    pub meta: Option<BinningMeta>,
}

impl BinnedSample {
    pub fn marginal_x(&self) -> Vec<u64> {
        self.joint_counts.iter().map(|row| row.iter().sum()).collect()
    }

    /// Nonempty cells as `(x midpoint, y midpoint, count)`.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.joint_counts.iter().enumerate().flat_map(move |(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(move |(j, &c)| (self.midpoints_x[i], self.midpoints_y[j], c))
        })
    }

    pub fn nonempty_cells(&self) -> usize {
        self.joint_counts.iter().flatten().filter(|&&c| c > 0).count()
    }
}

/// Grid whose square covers the central depth region of the pairs.
pub fn depth_grid(
    z: &LaggedPairs,
    params: &DepthParams,
    beta: f64,
    m: usize,
    mode: BetaMode,
) -> Result<Grid2D> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta = {beta} outside (0, 1)")));
    }
    if m < 3 {
        return Err(invalid(format!("grid needs at least 3 edges, got {m}")));
    }
    if z.len() < m {
        return Err(Error::InsufficientData { need: m, have: z.len() });
    }
    let depths = depth_all(&z.pairs, params)?;
    let region = smallest_region_from_depths(&depths, mode.covered_mass(beta))?;
    let (lo, hi) = region.members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, &i| {
        let [x, y] = z.pairs[i];
        (acc.0.min(x).min(y), acc.1.max(x).max(y))
    });
    Grid2D::new(lo, hi, m)
}

pub fn bin2d(z: &LaggedPairs, grid: &Grid2D) -> BinnedSample {
    let k = grid.m() - 1;
    let mut joint = vec![vec![0u64; k]; k];
    let mut trimmed = 0u64;
    for &[x, y] in &z.pairs {
        match (grid.interior_bin(x), grid.interior_bin(y)) {
            (Some(i), Some(j)) => joint[i][j] += 1,
            _ => trimmed += 1,
        }
    }
    let mids = grid.midpoints();
    let marginal_y = (0..k).map(|j| joint.iter().map(|row| row[j]).sum()).collect();
    BinnedSample {
        midpoints_x: mids.clone(),
        midpoints_y: mids,
        total_interior: z.len() as u64 - trimmed,
        joint_counts: joint,
        marginal_y,
        trimmed_count: trimmed,
        grid: grid.clone(),
        meta: None,
    }
}

/// Depth grid, binning and trimming of the extreme classes in one step.
pub fn robust_bin(
    z: &LaggedPairs,
    params: &DepthParams,
    beta: f64,
    m: usize,
    mode: BetaMode,
) -> Result<BinnedSample> {
    let grid = depth_grid(z, params, beta, m, mode)?;
    let mut binned = bin2d(z, &grid);
    if binned.total_interior == 0 {
        return Err(Error::EmptyBinnedSample);
    }
    binned.meta = Some(BinningMeta {
        beta,
        m,
        beta_mode: mode,
        trimmed_count: binned.trimmed_count as usize,
    });
    Ok(binned)
}

/// Plain binning over the full data range with no trimming.
pub fn simple_bin(z: &LaggedPairs, m: usize) -> Result<BinnedSample> {
    let (lo, hi) = z
        .pairs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, &[x, y]| {
            (acc.0.min(x).min(y), acc.1.max(x).max(y))
        });
    if z.is_empty() {
        return Err(Error::EmptySample);
    }
    // nudge the top edge so the maximum lands in the last interior bin
    let pad = (hi - lo).abs().max(1.0) * 1e-9;
    let grid = Grid2D::new(lo, hi + pad, m)?;
    Ok(bin2d(z, &grid))
}
