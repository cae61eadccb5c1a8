use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::models::Trajectory;
use crate::error::{invalid, Result};
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContaminationKind {
    /// Additive outliers: `theta ~ N(location, scale^2)` is added. With
    /// `relative`, both are multiples of the clean path's standard deviation.
    Ao {
        location: f64,
        #[serde(default)]
        scale: f64,
        #[serde(default)]
        relative: bool,
    },
    /// Inliers: the value is replaced by a draw from a 7-component normal
    /// mixture fitted to the clean path (six narrow components at its
    /// 20/30/40/60/70/80% quantiles with sd MAD/2, one wide component at
    /// the median with sd 10 SD, equal weights).
    Io,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub fraction: f64,
    #[serde(flatten)]
    pub kind: ContaminationKind,
}

impl ContaminationSpec {
    pub fn additive(fraction: f64, location: f64, scale: f64) -> Self {
        Self { fraction, kind: ContaminationKind::Ao { location, scale, relative: false } }
    }

    /// Additive outliers sized in units of the clean standard deviation.
    pub fn additive_relative(fraction: f64, location: f64, scale: f64) -> Self {
        Self { fraction, kind: ContaminationKind::Ao { location, scale, relative: true } }
    }

    pub fn inliers(fraction: f64) -> Self {
        Self { fraction, kind: ContaminationKind::Io }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(invalid(format!("contamination fraction = {} outside [0, 1]", self.fraction)));
        }
        if let ContaminationKind::Ao { location, scale, .. } = self.kind {
            if !location.is_finite() || !(scale >= 0.0 && scale.is_finite()) {
                return Err(invalid("AO location must be finite and scale >= 0"));
            }
        }
        Ok(())
    }
}

/// Components `(mean, sd)` of the inlier mixture for a clean path.
pub fn inlier_mixture(clean: &[f64]) -> Vec<(f64, f64)> {
    let sorted = stats::sorted_copy(clean);
    let s = stats::mad(clean) / 2.0;
    let mut comps: Vec<(f64, f64)> =
        [0.2, 0.3, 0.4, 0.6, 0.7, 0.8].iter().map(|&q| (stats::quantile_sorted(&sorted, q), s)).collect();
    comps.push((stats::quantile_sorted(&sorted, 0.5), 10.0 * stats::sd(clean)));
    comps
}

/// Flag each observation independently with probability `fraction` and
/// perturb the flagged ones. Flags and perturbations accumulate on top of
/// any earlier contamination.
pub fn contaminate(traj: &Trajectory, spec: &ContaminationSpec, seed: u64) -> Result<Trajectory> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mixture = match spec.kind {
        ContaminationKind::Io if !traj.is_empty() => inlier_mixture(&traj.clean),
        _ => Vec::new(),
    };
    let unit = match spec.kind {
        ContaminationKind::Ao { relative: true, .. } if traj.len() > 1 => stats::sd(&traj.clean),
        _ => 1.0,
    };
    let mut out = traj.clone();
    for i in 0..out.len() {
        if rng.random::<f64>() >= spec.fraction {
            continue;
        }
        out.contaminated[i] = true;
        match spec.kind {
            ContaminationKind::Ao { location, scale, .. } => {
                let z: f64 = rng.sample(StandardNormal);
                out.values[i] += unit * (location + scale * z);
            }
            ContaminationKind::Io => {
                let (mean, sd) = mixture[rng.random_range(0..mixture.len())];
                let z: f64 = rng.sample(StandardNormal);
                out.values[i] = mean + sd * z;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::innovation::InnovationSpec;
    use crate::sim::models::{simulate_setar, SetarSpec};

    fn path(n: usize) -> Trajectory {
        simulate_setar(&SetarSpec::two_regime(5.0, InnovationSpec::normal()), n, 100, 5).unwrap()
    }

    #[test]
    fn zero_fraction_is_identity() {
        let t = path(500);
        let c = contaminate(&t, &ContaminationSpec::additive(0.0, 10.0, 1.0), 1).unwrap();
        assert_eq!(c, t);
    }

    #[test]
    fn full_fraction_constant_shift() {
        let t = path(200);
        let c = contaminate(&t, &ContaminationSpec::additive(1.0, 2.5, 0.0), 1).unwrap();
        for (a, b) in t.values.iter().zip(&c.values) {
            assert_eq!(*b, a + 2.5);
        }
        assert!(c.contaminated.iter().all(|&f| f));
        assert_eq!(c.clean, t.clean);
    }

    #[test]
    fn flag_fraction_concentrates() {
        let t = path(100_000);
        for spec in [ContaminationSpec::additive(0.1, 10.0, 1.0), ContaminationSpec::inliers(0.1)] {
            let c = contaminate(&t, &spec, 7).unwrap();
            let frac = c.contaminated.iter().filter(|&&f| f).count() as f64 / 1e5;
            assert!((frac - 0.1).abs() < 0.003, "{frac}");
        }
    }

    #[test]
    fn inlier_mixture_shape() {
        let t = path(2000);
        let comps = inlier_mixture(&t.clean);
        assert_eq!(comps.len(), 7);
        assert!(comps[..6].windows(2).all(|w| w[0].0 <= w[1].0));
        assert!(comps[6].1 > 5.0 * comps[0].1);
    }

    #[test]
    fn rejects_bad_fraction() {
        assert!(ContaminationSpec::additive(1.5, 0.0, 0.0).validate().is_err());
    }
}
