//! Replication experiments comparing predictive density estimators against
//! the simulator's one-step truth.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cde::{estimate_pd_values, BinningMode, CdeConfig};
use crate::error::{invalid, Error, Result};
use crate::sim::{
    contaminate, eval_grid, eval_r1, simulate_schedule, true_conditional_density, ContaminationSpec, InnovationSpec,
    ModelSpec, SetarSpec, SubModel, Trajectory, TruthContext, DEFAULT_BURN_IN,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Kernel ratio estimator on the raw pairs (degree 0, no link).
    KernBaseline,
    /// Constrained local linear fit on the raw pairs.
    LocpolUnbinned,
    /// Robust binning followed by the constrained local linear fit.
    Prop1,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::KernBaseline, Estimator::LocpolUnbinned, Estimator::Prop1];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::KernBaseline => "kern_baseline",
            Estimator::LocpolUnbinned => "locpol_unbinned",
            Estimator::Prop1 => "prop1",
        }
    }

    /// `base` with the binning, degree and link this estimator fixes.
    pub fn config(self, base: &CdeConfig) -> CdeConfig {
        let mut cfg = base.clone();
        match self {
            Estimator::KernBaseline => {
                cfg.binning = BinningMode::None;
                cfg.degree = 0;
                cfg.link = false;
            }
            Estimator::LocpolUnbinned => {
                cfg.binning = BinningMode::None;
                cfg.degree = 1;
                cfg.link = true;
            }
            Estimator::Prop1 => {
                cfg.binning = BinningMode::Robust;
                cfg.degree = 1;
                cfg.link = true;
            }
        }
        cfg
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| invalid(format!("unknown estimator `{s}` (kern_baseline, locpol_unbinned, prop1)")))
    }
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// A stream of `n` observations cut into consecutive regime blocks:
/// the first `shares[0] * n` from `models[0]`, and so on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub models: Vec<SubModel>,
    pub shares: Vec<f64>,
    pub n: usize,
    #[serde(default)]
    pub contamination: Option<ContaminationSpec>,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.models.len() != self.shares.len() {
            return Err(invalid(format!(
                "scenario `{}`: {} models but {} shares",
                self.name,
                self.models.len(),
                self.shares.len()
            )));
        }
        if self.shares.iter().any(|s| !(*s >= 0.0)) || (self.shares.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("scenario `{}`: shares must be >= 0 and sum to 1", self.name)));
        }
        if self.n < 20 {
            return Err(invalid(format!("scenario `{}`: n = {} must be >= 20", self.name, self.n)));
        }
        for m in &self.models {
            m.validate()?;
        }
        if let Some(c) = &self.contamination {
            c.validate()?;
        }
        Ok(())
    }

    /// Regime label of every observation.
    pub fn schedule(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n);
        let mut cum = 0.0;
        for (q, share) in self.shares.iter().enumerate() {
            cum += share;
            let end = if q + 1 == self.shares.len() { self.n } else { (cum * self.n as f64).round() as usize };
            while out.len() < end.min(self.n) {
                out.push(q);
            }
        }
        out
    }

    pub fn simulate(&self, seed: u64) -> Result<Trajectory> {
        let traj = simulate_schedule(&self.models, &self.schedule(), self.burn_in, seed)?;
        match &self.contamination {
            Some(c) => contaminate(&traj, c, seed ^ 0x5eed_c0de),
            None => Ok(traj),
        }
    }

    /// One-step truth after the final observation, with the final value
    /// replaced by each condition point.
    pub fn truth(&self, traj: &Trajectory, conditions: &[f64], y_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = traj.len();
        if n < 2 {
            return Err(Error::InsufficientData { need: 2, have: n });
        }
        let model = match &self.models[traj.regimes[n - 1]] {
            SubModel::ArGarch(s) => ModelSpec::ArGarch(s.clone()),
            SubModel::Setar(s) => ModelSpec::Setar(s.clone()),
        };
        let history: Vec<f64> = traj.clean[..n - 1].iter().rev().take(16).copied().collect();
        let ctx = TruthContext { history, sigma2: Some(traj.sigma[n - 1].powi(2)) };
        conditions.iter().map(|&a| true_conditional_density(&model, a, &ctx, y_grid)).collect()
    }
}

/// The two-regime SETAR mixes 10/90, 20/80, 30/70 and 40/60 (upper
/// intercepts 5 and 10, Student t(3) innovations) with optional contamination.
pub fn setar_mix_scenarios(n: usize, contamination: Option<ContaminationSpec>) -> Vec<Scenario> {
    let inn = InnovationSpec::student_t(3.0);
    let models = vec![SubModel::Setar(SetarSpec::two_regime(5.0, inn)), SubModel::Setar(SetarSpec::two_regime(10.0, inn))];
    [10, 20, 30, 40]
        .into_iter()
        .map(|p| Scenario {
            name: format!("{p}%-{}%", 100 - p),
            models: models.clone(),
            shares: vec![p as f64 / 100.0, 1.0 - p as f64 / 100.0],
            n,
            contamination,
            burn_in: DEFAULT_BURN_IN,
        })
        .collect()
}

/// Evaluation grid and the estimator settings shared by all estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    /// Grid half-width in MADs around the median.
    pub spread: f64,
    pub grid_points: usize,
    pub conditions: usize,
    pub cde: CdeConfig,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { spread: 5.0, grid_points: 500, conditions: 20, cde: CdeConfig::default() }
    }
}

/// `d_H` and estimation time of each estimator on one replication.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Replication {
    pub estimator: Estimator,
    pub d_h: f64,
    pub seconds: f64,
}

pub fn replicate(scenario: &Scenario, estimators: &[Estimator], settings: &EvalSettings, seed: u64) -> Result<Vec<Replication>> {
    let traj = scenario.simulate(seed)?;
    let (grid, conds) = eval_grid(&traj.values, settings.spread, settings.grid_points, settings.conditions)?;
    let truth = scenario.truth(&traj, &conds, &grid)?;
    estimators
        .iter()
        .map(|&e| {
            let mut cfg = e.config(&settings.cde);
            cfg.y_grid = Some(grid.clone());
            cfg.conditions = Some(conds.clone());
            let start = Instant::now();
            let est = estimate_pd_values(&traj.values, &cfg)?;
            let seconds = start.elapsed().as_secs_f64();
            let d_h = eval_r1(&[est.values], &[truth.clone()])?;
            Ok(Replication { estimator: e, d_h, seconds })
        })
        .collect()
}

/// One row of the replication table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub scenario: String,
    pub estimator: Estimator,
    pub reps: usize,
    pub mean_d_h: f64,
    pub sd_d_h: f64,
    pub mean_seconds: f64,
}

/// Seed of replication `rep` of scenario `s`.
pub fn replication_seed(seed: u64, s: usize, rep: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add((s as u64) << 32).wrapping_add(rep as u64)
}

/// Run `reps` replications of every scenario on `jobs` worker threads.
pub fn run_table(
    scenarios: &[Scenario],
    estimators: &[Estimator],
    reps: usize,
    settings: &EvalSettings,
    seed: u64,
    jobs: usize,
) -> Result<Vec<TableRow>> {
    if reps == 0 || estimators.is_empty() {
        return Err(invalid("need at least one replication and one estimator"));
    }
    for s in scenarios {
        s.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    let tasks: Vec<(usize, usize)> = (0..scenarios.len()).flat_map(|s| (0..reps).map(move |r| (s, r))).collect();
    let results: Vec<Vec<Replication>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(s, r)| replicate(&scenarios[s], estimators, settings, replication_seed(seed, s, r)))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::new();
    for (s, scenario) in scenarios.iter().enumerate() {
        let reps_of = &results[s * reps..(s + 1) * reps];
        for (k, &e) in estimators.iter().enumerate() {
            let d: Vec<f64> = reps_of.iter().map(|r| r[k].d_h).collect();
            let secs: Vec<f64> = reps_of.iter().map(|r| r[k].seconds).collect();
            rows.push(TableRow {
                scenario: scenario.name.clone(),
                estimator: e,
                reps,
                mean_d_h: crate::stats::mean(&d),
                sd_d_h: if reps > 1 { crate::stats::sd(&d) } else { 0.0 },
                mean_seconds: crate::stats::mean(&secs),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(n: usize) -> Scenario {
        let inn = InnovationSpec::normal();
        Scenario {
            name: "two".into(),
            models: vec![SubModel::Setar(SetarSpec::two_regime(5.0, inn)), SubModel::Setar(SetarSpec::two_regime(10.0, inn))],
            shares: vec![0.2, 0.8],
            n,
            contamination: None,
            burn_in: 100,
        }
    }

    #[test]
    fn schedule_blocks() {
        let s = scenario(10).schedule();
        assert_eq!(s, vec![0, 0, 1, 1, 1, 1, 1, 1, 1, 1]);
        let mut bad = scenario(100);
        bad.shares = vec![0.5, 0.6];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in Estimator::ALL {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert!("loess".parse::<Estimator>().is_err());
    }

    #[test]
    fn tiny_table_is_finite() {
        let settings = EvalSettings { grid_points: 50, conditions: 3, ..Default::default() };
        let rows = run_table(&[scenario(200)], &[Estimator::KernBaseline], 1, &settings, 3, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].mean_d_h.is_finite() && rows[0].mean_d_h > 0.0);
    }

    #[test]
    fn truth_rows_integrate_to_one() {
        let sc = scenario(300);
        let t = sc.simulate(1).unwrap();
        let (grid, conds) = eval_grid(&t.values, 5.0, 400, 4).unwrap();
        for row in sc.truth(&t, &conds, &grid).unwrap() {
            let mass = crate::stats::trapezoid(&row, grid[1] - grid[0]);
            assert!(mass > 0.9 && mass <= 1.0 + 1e-6, "{mass}");
        }
    }
}
