use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::innovation::InnovationSpec;
use crate::error::{invalid, Error, Result};

/// AR(1) mean with a GARCH(1,1)-type variance recursion
/// `sigma2_t = omega + beta * sigma2_{t-1} + alpha * X_{t-1}^2`.
///
/// With `garch_on_residuals` the squared term uses the previous residual
/// `X_{t-1} - c - phi X_{t-2}` instead of the raw value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArGarchSpec {
    pub c: f64,
    pub phi: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub innovation: InnovationSpec,
    #[serde(default)]
    pub garch_on_residuals: bool,
}

impl ArGarchSpec {
    pub fn new(c: f64, phi: f64, omega: f64, alpha: f64, beta: f64, innovation: InnovationSpec) -> Self {
        Self { c, phi, omega, alpha, beta, innovation, garch_on_residuals: false }
    }

    /// `X_t = 5 + 0.1 X_{t-1} + sigma_t Z_t`, `sigma2_t = 1 + 0.1 sigma2_{t-1} + 0.75 X_{t-1}^2`.
    pub fn low_level(innovation: InnovationSpec) -> Self {
        Self::new(5.0, 0.1, 1.0, 0.75, 0.1, innovation)
    }

    /// As [`ArGarchSpec::low_level`] with intercept 10.
    pub fn high_level(innovation: InnovationSpec) -> Self {
        Self::new(10.0, 0.1, 1.0, 0.75, 0.1, innovation)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.c, self.phi, self.omega, self.alpha, self.beta].iter().all(|v| v.is_finite()) {
            return Err(invalid("AR-GARCH parameters must be finite"));
        }
        if !(self.omega > 0.0) {
            return Err(invalid(format!("omega = {} must be > 0", self.omega)));
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(invalid("GARCH alpha and beta must be >= 0"));
        }
        self.innovation.validate()
    }

    pub fn is_explosive(&self) -> bool {
        self.alpha + self.beta >= 1.0
    }

    /// Non-fatal issues worth reporting to the user.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.is_explosive() {
            out.push(format!(
                "alpha + beta = {} >= 1: the variance recursion may be explosive",
                self.alpha + self.beta
            ));
        }
        out
    }

    pub fn stationary_mean(&self) -> f64 {
        if self.phi == 1.0 {
            self.c
        } else {
            self.c / (1.0 - self.phi)
        }
    }

    pub fn initial_variance(&self) -> f64 {
        if self.beta < 1.0 {
            self.omega / (1.0 - self.beta)
        } else {
            self.omega
        }
    }

    /// `sigma2_t` from `sigma2_{t-1}` and the previous value (or residual).
    pub fn next_variance(&self, sigma2_prev: f64, x_prev: f64, resid_prev: f64) -> f64 {
        let shock = if self.garch_on_residuals { resid_prev } else { x_prev };
        self.omega + self.beta * sigma2_prev + self.alpha * shock * shock
    }

    /// One step of the recursion driven by the standardised draw `z`.
    pub fn step(&self, state: &mut StreamState, z: f64) -> f64 {
        let x_prev = state.last();
        let sigma2 = self.next_variance(state.sigma2, x_prev, state.resid);
        let resid = sigma2.sqrt() * z;
        let x = self.c + self.phi * x_prev + resid;
        state.sigma2 = sigma2;
        state.resid = resid;
        state.push(x);
        x
    }
}

/// Self-exciting threshold autoregression.
///
/// `rows[j] = [b_0j, b_1j, ..., b_pj]` is active when the delay variable
/// `X_{t+1-delay}` lies in the `j`-th cell of the partition
/// `(-inf, t_1], (t_1, t_2], ..., (t_k, inf)` of the ascending thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetarSpec {
    pub rows: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
    pub delay: usize,
    pub innovation: InnovationSpec,
    #[serde(default = "unit")]
    pub scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl SetarSpec {
    /// Two regimes split at `X_{t-1} <= 3`: `1 + 0.9 X_t` below, `upper - 0.9 X_t` above.
    pub fn two_regime(upper: f64, innovation: InnovationSpec) -> Self {
        Self {
            rows: vec![vec![1.0, 0.9], vec![upper, -0.9]],
            thresholds: vec![3.0],
            delay: 2,
            innovation,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() != self.thresholds.len() + 1 {
            return Err(invalid(format!(
                "{} thresholds need {} coefficient rows, got {}",
                self.thresholds.len(),
                self.thresholds.len() + 1,
                self.rows.len()
            )));
        }
        if self.rows.iter().any(|r| r.is_empty() || r.iter().any(|v| !v.is_finite())) {
            return Err(invalid("SETAR rows must be nonempty and finite"));
        }
        if self.thresholds.iter().any(|t| !t.is_finite()) || self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("SETAR thresholds must be finite and strictly increasing"));
        }
        if self.delay == 0 {
            return Err(invalid("SETAR delay must be >= 1"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(invalid(format!("SETAR scale = {} must be > 0", self.scale)));
        }
        self.innovation.validate()
    }

    pub fn order(&self) -> usize {
        self.rows.iter().map(|r| r.len() - 1).max().unwrap_or(0)
    }

    /// Past values the recursion needs (current value included).
    pub fn memory(&self) -> usize {
        self.order().max(self.delay).max(1)
    }

    /// Regime index for a delay-variable value (thresholds inclusive from below).
    pub fn regime(&self, z: f64) -> usize {
        self.thresholds.iter().filter(|&&t| z > t).count()
    }

    /// Conditional mean of `X_{t+1}` given `history = [X_t, X_{t-1}, ...]`.
    pub fn predictor(&self, history: &[f64]) -> Result<f64> {
        if history.len() < self.memory() {
            return Err(Error::InsufficientData { need: self.memory(), have: history.len() });
        }
        let row = &self.rows[self.regime(history[self.delay - 1])];
        Ok(row[0] + row[1..].iter().zip(history).map(|(b, x)| b * x).sum::<f64>())
    }

    pub fn step(&self, state: &mut StreamState, z: f64) -> f64 {
        let history: Vec<f64> = state.history.iter().copied().collect();
        let mean = self.predictor(&history).expect("state memory covers the model");
        let x = mean + self.scale * z;
        state.resid = self.scale * z;
        state.push(x);
        x
    }
}

/// Sub-model of a regime-switching mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubModel {
    ArGarch(ArGarchSpec),
    Setar(SetarSpec),
}

impl SubModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            SubModel::ArGarch(s) => s.validate(),
            SubModel::Setar(s) => s.validate(),
        }
    }

    pub fn innovation(&self) -> &InnovationSpec {
        match self {
            SubModel::ArGarch(s) => &s.innovation,
            SubModel::Setar(s) => &s.innovation,
        }
    }

    fn memory(&self) -> usize {
        match self {
            SubModel::ArGarch(_) => 1,
            SubModel::Setar(s) => s.memory(),
        }
    }

    fn start_value(&self) -> f64 {
        match self {
            SubModel::ArGarch(s) => s.stationary_mean(),
            SubModel::Setar(_) => 0.0,
        }
    }

    /// Advance the shared state; returns the new value and its volatility.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut StreamState, rng: &mut R) -> (f64, f64) {
        let z = self.innovation().sample(rng);
        match self {
            SubModel::ArGarch(s) => {
                let x = s.step(state, z);
                (x, state.sigma2.sqrt())
            }
            SubModel::Setar(s) => (s.step(state, z), s.scale),
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        match self {
            SubModel::ArGarch(s) => s.warnings(),
            SubModel::Setar(_) => Vec::new(),
        }
    }
}

/// Recent values (most recent first) and volatility state shared by all
/// sub-models of a stream.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamState {
    pub history: VecDeque<f64>,
    pub sigma2: f64,
    pub resid: f64,
    memory: usize,
}

impl StreamState {
    pub fn new(memory: usize, start: f64, sigma2: f64) -> Self {
        let memory = memory.max(1);
        Self { history: std::iter::repeat_n(start, memory).collect(), sigma2, resid: 0.0, memory }
    }

    pub fn last(&self) -> f64 {
        self.history[0]
    }

    pub fn push(&mut self, x: f64) {
        self.history.push_front(x);
        self.history.truncate(self.memory);
    }
}

/// Hidden-Markov switching between sub-models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharmeSpec {
    pub models: Vec<SubModel>,
    pub transition: Vec<Vec<f64>>,
    #[serde(default)]
    pub initial: usize,
}

impl CharmeSpec {
    pub fn single(model: SubModel) -> Self {
        Self { models: vec![model], transition: vec![vec![1.0]], initial: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.models.len();
        if m == 0 {
            return Err(invalid("mixture needs at least one sub-model"));
        }
        if self.transition.len() != m {
            return Err(invalid(format!("transition matrix has {} rows for {m} sub-models", self.transition.len())));
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.len() != m {
                return Err(invalid(format!("transition row {i} has {} entries, expected {m}", row.len())));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(invalid(format!("transition row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("transition row {i} sums to {sum}, not 1")));
            }
        }
        if self.initial >= m {
            return Err(invalid(format!("initial state {} out of range for {m} sub-models", self.initial)));
        }
        self.models.iter().try_for_each(SubModel::validate)
    }

    /// Stationary distribution of the chain by power iteration.
    pub fn stationary(&self) -> Vec<f64> {
        let m = self.models.len();
        let mut pi = vec![1.0 / m as f64; m];
        for _ in 0..100_000 {
            let next: Vec<f64> =
                (0..m).map(|j| (0..m).map(|i| pi[i] * self.transition[i][j]).sum()).collect();
            let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if diff < 1e-15 {
                break;
            }
        }
        pi
    }

    fn initial_state(&self) -> StreamState {
        let memory = self.models.iter().map(SubModel::memory).max().unwrap_or(1);
        let sigma2 = self
            .models
            .iter()
            .find_map(|m| match m {
                SubModel::ArGarch(s) => Some(s.initial_variance()),
                SubModel::Setar(_) => None,
            })
            .unwrap_or(1.0);
        StreamState::new(memory, self.models[self.initial].start_value(), sigma2)
    }
}

/// Simulated stream.
///
/// `regimes` are 0-based sub-model indices. `values` are what is observed;
/// `clean` keeps the uncontaminated path and `sigma` the volatility used at
/// each step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub values: Vec<f64>,
    pub clean: Vec<f64>,
    pub regimes: Vec<usize>,
    pub contaminated: Vec<bool>,
    pub sigma: Vec<f64>,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Share of observations spent in each of `m` regimes.
    pub fn occupancy(&self, m: usize) -> Vec<f64> {
        let mut counts = vec![0usize; m];
        for &q in &self.regimes {
            counts[q] += 1;
        }
        counts.iter().map(|&c| c as f64 / self.len().max(1) as f64).collect()
    }

    /// Clean values before index `i`, most recent first, up to `depth` of them.
    pub fn history_before(&self, i: usize, depth: usize) -> Vec<f64> {
        self.clean[..i].iter().rev().take(depth).copied().collect()
    }
}

fn sample_row<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // rounding left u above the total; take the last state with mass
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

fn run(
    spec: &CharmeSpec,
    n: usize,
    burn_in: usize,
    seed: u64,
    mut next_regime: impl FnMut(usize, usize, &mut ChaCha8Rng) -> usize,
) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = spec.initial_state();
    let mut q = spec.initial;
    let mut out = Trajectory {
        values: Vec::with_capacity(n),
        clean: Vec::new(),
        regimes: Vec::with_capacity(n),
        contaminated: vec![false; n],
        sigma: Vec::with_capacity(n),
        seed,
    };
    for t in 0..burn_in + n {
        if t > 0 {
            q = next_regime(t, q, &mut rng);
        }
        let (x, s) = spec.models[q].step(&mut state, &mut rng);
        if t >= burn_in {
            out.values.push(x);
            out.regimes.push(q);
            out.sigma.push(s);
        }
    }
    out.clean = out.values.clone();
    out
}

/// Simulate `n` observations after discarding `burn_in`.
pub fn simulate_charme(spec: &CharmeSpec, n: usize, burn_in: usize, seed: u64) -> Result<Trajectory> {
    spec.validate()?;
    let single = spec.models.len() == 1;
    Ok(run(spec, n, burn_in, seed, |_, q, rng| {
        if single {
            q
        } else {
            sample_row(&spec.transition[q], rng)
        }
    }))
}

/// Simulate with a fixed regime path instead of the hidden chain. The
/// burn-in runs in `regimes[0]`.
pub fn simulate_schedule(models: &[SubModel], regimes: &[usize], burn_in: usize, seed: u64) -> Result<Trajectory> {
    let first = *regimes.first().ok_or(Error::EmptySample)?;
    if let Some(&bad) = regimes.iter().find(|&&q| q >= models.len()) {
        return Err(invalid(format!("regime {bad} out of range for {} sub-models", models.len())));
    }
    let m = models.len();
    let spec = CharmeSpec {
        models: models.to_vec(),
        transition: (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        initial: first,
    };
    spec.validate()?;
    Ok(run(&spec, regimes.len(), burn_in, seed, |t, _, _| regimes[t.saturating_sub(burn_in)]))
}

pub fn simulate_ar_garch(spec: &ArGarchSpec, n: usize, burn_in: usize, seed: u64) -> Result<Trajectory> {
    simulate_charme(&CharmeSpec::single(SubModel::ArGarch(*spec)), n, burn_in, seed)
}

pub fn simulate_setar(spec: &SetarSpec, n: usize, burn_in: usize, seed: u64) -> Result<Trajectory> {
    simulate_charme(&CharmeSpec::single(SubModel::Setar(spec.clone())), n, burn_in, seed)
}

/// Any simulator model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    ArGarch(ArGarchSpec),
    Setar(SetarSpec),
    Charme(CharmeSpec),
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::ArGarch(s) => s.validate(),
            ModelSpec::Setar(s) => s.validate(),
            ModelSpec::Charme(s) => s.validate(),
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        match self {
            ModelSpec::ArGarch(s) => s.warnings(),
            ModelSpec::Setar(_) => Vec::new(),
            ModelSpec::Charme(s) => s.models.iter().flat_map(SubModel::warnings).collect(),
        }
    }

    pub fn simulate(&self, n: usize, burn_in: usize, seed: u64) -> Result<Trajectory> {
        match self {
            ModelSpec::ArGarch(s) => simulate_ar_garch(s, n, burn_in, seed),
            ModelSpec::Setar(s) => simulate_setar(s, n, burn_in, seed),
            ModelSpec::Charme(s) => simulate_charme(s, n, burn_in, seed),
        }
    }
}

impl From<SubModel> for ModelSpec {
    fn from(m: SubModel) -> Self {
        match m {
            SubModel::ArGarch(s) => ModelSpec::ArGarch(s),
            SubModel::Setar(s) => ModelSpec::Setar(s),
        }
    }
}

/// State beyond the condition value needed by the one-step truth.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TruthContext {
    /// `[X_{t-1}, X_{t-2}, ...]` when conditioning on `X_t = a`.
    pub history: Vec<f64>,
    /// Conditional variance `sigma2_t` recorded at time `t`.
    pub sigma2: Option<f64>,
}

/// Density of `X_{t+1}` given `X_t = a` on `y_grid`.
///
/// For AR-GARCH the scale is `sigma_{t+1}`, obtained from the recorded
/// `sigma2_t` and `a` by one step of the variance recursion.
pub fn true_conditional_density(model: &ModelSpec, a: f64, ctx: &TruthContext, y_grid: &[f64]) -> Result<Vec<f64>> {
    match model {
        ModelSpec::Setar(s) => {
            let mut history = vec![a];
            history.extend_from_slice(&ctx.history);
            let mean = s.predictor(&history)?;
            Ok(y_grid.iter().map(|&y| s.innovation.pdf((y - mean) / s.scale) / s.scale).collect())
        }
        ModelSpec::ArGarch(s) => {
            let sigma2 = ctx.sigma2.ok_or_else(|| invalid("AR-GARCH truth needs the recorded sigma2"))?;
            let resid = if s.garch_on_residuals {
                let prev = *ctx.history.first().ok_or(Error::InsufficientData { need: 1, have: 0 })?;
                a - s.c - s.phi * prev
            } else {
                0.0
            };
            let sd = s.next_variance(sigma2, a, resid).sqrt();
            let mean = s.c + s.phi * a;
            Ok(y_grid.iter().map(|&y| s.innovation.pdf((y - mean) / sd) / sd).collect())
        }
        ModelSpec::Charme(_) => Err(Error::Unsupported(
            "a switching mixture has no single conditional density; mix the sub-model \
             densities with the current regime probabilities"
                .into(),
        )),
    }
}
