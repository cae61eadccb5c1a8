//! Regime-switching stream simulation, contamination and one-step truths.

mod contamination;
mod eval;
mod innovation;
mod models;

pub use contamination::{contaminate, inlier_mixture, ContaminationKind, ContaminationSpec};
pub use eval::{eval_grid, eval_r1, eval_r2};
pub use innovation::{Family, InnovationSpec, DEFAULT_SKEW};
pub use models::{
    simulate_ar_garch, simulate_charme, simulate_schedule, simulate_setar, true_conditional_density, ArGarchSpec,
    CharmeSpec, ModelSpec, SetarSpec, StreamState, SubModel, Trajectory, TruthContext,
};

/// Burn-in discarded by default before recording a path.
pub const DEFAULT_BURN_IN: usize = 1000;
