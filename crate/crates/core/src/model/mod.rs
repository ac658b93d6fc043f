//! Game specification: coefficient paths, weights, validation and derived
//! problem variants.

pub mod config;
mod grid;
mod path;
mod spec;

pub use grid::TimeGrid;
pub use path::{CoefficientPath, PathKind, Side};
pub use spec::{
    embed_perturbation, perturbation_block, specialize_no_meanfield, validate_spec, CostWeights, GameSpec, IssueKind,
    Player, Snapshot, StateCoefficients, ValidationIssue, ValidationReport, SYMMETRY_TOL,
};

/// Evaluates a coefficient path at `t ∈ [0, horizon]`.
pub fn eval_coefficient(path: &CoefficientPath, t: f64, horizon: f64) -> crate::Result<crate::linalg::Mat> {
    path.eval_on(t, horizon)
}
