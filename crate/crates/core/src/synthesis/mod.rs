//! Closed-loop saddle synthesis, exact moment evaluation of the cost for
//! affine controls, a Monte Carlo cross-check and saddle verification.

mod feedback;
mod law;
mod moments;
mod montecarlo;
mod saddle;

pub use feedback::{build_feedback, gain_residual, stationarity_residual, FeedbackLaw};
pub use law::{embed_player_path, ControlLaw, Gains, OffsetPath, SampledPath, VectorSource};
pub use moments::{
    control_distance_sq, control_norm_sq, evaluate_functional, propagate_moments, CostParts, Method, MomentState,
    ValueReport,
};
pub use montecarlo::{evaluate_functional_mc, NoiseBundle};
pub use saddle::{default_directions, verify_saddle, Direction, ExpansionEntry, SaddleReport, DEFAULT_LAMBDAS, SADDLE_SCOPE};

use std::sync::Arc;

use crate::error::Result;
use crate::model::{GameSpec, TimeGrid};
use crate::riccati::{solve_game_riccati, solve_mean_riccati, RiccatiOptions};

/// Solves both Riccati equations and builds the saddle feedback.
pub fn synthesize(spec: &GameSpec, grid: &TimeGrid, opts: &RiccatiOptions) -> Result<Arc<FeedbackLaw>> {
    let p = solve_game_riccati(spec, grid, opts)?;
    let pi = solve_mean_riccati(spec, &p, grid, opts)?;
    Ok(Arc::new(build_feedback(spec, &p, &pi, opts)?))
}

#[cfg(test)]
mod tests;
