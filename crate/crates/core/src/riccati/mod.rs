//! Riccati equations of the game: the single-player control equations, the
//! game equation, the mean equation, and regularity/comparison diagnostics.

mod checks;
mod dense;
mod equations;
mod integrate;
mod solution;

pub use checks::{
    assemble_dg_weights, check_comparison, check_strong_regularity, ComparisonReport, DGWeights, RegularityReport,
    COMPARISON_TOL,
};
pub use dense::DensePath;
pub use equations::EquationKind;
pub use solution::{
    riccati_residual, solve_control_riccati, solve_game_riccati, solve_mean_riccati, Equation, RiccatiOptions,
    RiccatiSolution,
};

pub(crate) use equations::{Channel, MeanData};
pub(crate) use integrate::substeps_for;
