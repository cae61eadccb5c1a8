//! Distances between density rows evaluated on a shared equally spaced grid.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    #[default]
    Hellinger,
    Kolmogorov,
    /// Sum of absolute deviations; meant for evaluation against a truth.
    AbsDev,
}

impl std::str::FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hellinger" => Ok(Self::Hellinger),
            "kolmogorov" => Ok(Self::Kolmogorov),
            "abs_dev" => Ok(Self::AbsDev),
            other => Err(invalid(format!("unknown distance `{other}`"))),
        }
    }
}

impl DistanceKind {
    pub fn eval(self, f: &[f64], g: &[f64], grid: &[f64]) -> Result<f64> {
        match self {
            Self::Hellinger => hellinger(f, g, grid),
            Self::Kolmogorov => kolmogorov(f, g, grid),
            Self::AbsDev => abs_dev(f, g, grid),
        }
    }
}

fn check(f: &[f64], g: &[f64], grid: &[f64]) -> Result<f64> {
    if f.len() != grid.len() || g.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    if grid.len() < 2 {
        return Err(invalid("density grid needs at least 2 points"));
    }
    let delta = grid[1] - grid[0];
    if !(delta > 0.0) {
        return Err(invalid("density grid must be increasing"));
    }
    if f.iter().chain(g).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("densities must be finite and nonnegative"));
    }
    Ok(delta)
}

fn rescaled(f: &[f64], mass: f64) -> Result<Vec<f64>> {
    if !(mass > 0.0) {
        return Err(invalid("density has zero mass on the grid"));
    }
    Ok(f.iter().map(|v| v / mass).collect())
}

/// Hellinger distance after renormalising both rows to unit Riemann mass.
///
/// Computed as `sqrt(0.5 * sum (sqrt f - sqrt g)^2 * delta)`, which equals
/// `sqrt(1 - sum sqrt(f g) delta)` for unit-mass rows and is exactly zero on
/// identical inputs.
pub fn hellinger(f: &[f64], g: &[f64], grid: &[f64]) -> Result<f64> {
    let delta = check(f, g, grid)?;
    let f = rescaled(f, f.iter().sum::<f64>() * delta)?;
    let g = rescaled(g, g.iter().sum::<f64>() * delta)?;
    let sq: f64 = f.iter().zip(&g).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    Ok((0.5 * sq * delta).sqrt().clamp(0.0, 1.0))
}

fn cumulative(f: &[f64], delta: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(f.len());
    out.push(0.0);
    for w in f.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * delta;
        out.push(acc);
    }
    out
}

/// Sup distance between cumulative trapezoid integrals of the normalised rows.
pub fn kolmogorov(f: &[f64], g: &[f64], grid: &[f64]) -> Result<f64> {
    let delta = check(f, g, grid)?;
    let cf = cumulative(f, delta);
    let cg = cumulative(g, delta);
    let cf = rescaled(&cf, cf[cf.len() - 1])?;
    let cg = rescaled(&cg, cg[cg.len() - 1])?;
    let sup = cf.iter().zip(&cg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(sup.clamp(0.0, 1.0))
}

/// `sum_l |f_l - g_l|` with no grid weighting.
pub fn abs_dev(f: &[f64], g: &[f64], grid: &[f64]) -> Result<f64> {
    if f.len() != grid.len() || g.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    Ok(f.iter().zip(g).map(|(a, b)| (a - b).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hellinger_hand_values() {
        let grid = [0.0, 1.0];
        assert_eq!(hellinger(&[0.5, 0.5], &[0.5, 0.5], &grid).unwrap(), 0.0);
        let h = hellinger(&[0.5, 0.5], &[1.0, 0.0], &grid).unwrap();
        assert!((h - (1.0 - 0.5f64.sqrt()).sqrt()).abs() < 1e-15);
        assert_eq!(hellinger(&[1.0, 0.0], &[0.0, 1.0], &grid).unwrap(), 1.0);
        // renormalisation: scale does not matter
        assert_eq!(hellinger(&[2.0, 2.0], &[0.5, 0.5], &grid).unwrap(), 0.0);
    }

    #[test]
    fn kolmogorov_hand_values() {
        let grid = [0.0, 1.0, 2.0, 3.0];
        let f = [1.0, 0.0, 0.0, 0.0];
        let g = [0.0, 0.0, 1.0, 0.0];
        assert_eq!(kolmogorov(&f, &g, &grid).unwrap(), 1.0);
        assert_eq!(kolmogorov(&f, &f, &grid).unwrap(), 0.0);
        // increments 0.5, 0.5 against 0.2, 0.8 after the first cell
        let grid = [0.0, 1.0, 2.0];
        let d = kolmogorov(&[0.5, 0.5, 0.5], &[0.2, 0.2, 1.4], &grid).unwrap();
        assert!((d - 0.3).abs() < 1e-15, "{d}");
    }

    #[test]
    fn abs_dev_hand_values() {
        let grid = [0.0, 1.0, 2.0];
        assert_eq!(abs_dev(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &grid).unwrap(), 2.0);
        assert_eq!(abs_dev(&[0.3, 0.2, 0.1], &[0.3, 0.2, 0.1], &grid).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_grids() {
        let grid = [0.0, 1.0, 2.0];
        for kind in [DistanceKind::Hellinger, DistanceKind::Kolmogorov, DistanceKind::AbsDev] {
            assert!(matches!(kind.eval(&[1.0, 1.0], &[1.0, 1.0, 1.0], &grid), Err(Error::GridMismatch)));
        }
    }
}
