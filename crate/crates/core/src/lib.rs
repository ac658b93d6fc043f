//! Mean-field linear-quadratic two-person zero-sum stochastic differential
//! games: Riccati solvers, closed-loop saddle synthesis, the underlying
//! quadratic-functional operators and the ε-perturbation procedure.

pub mod error;
pub mod examples;
pub mod instances;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod perturbation;
pub mod riccati;
pub mod synthesis;

pub use error::{Error, Result};
pub use linalg::{Mat, Vector};
pub use model::{CoefficientPath, GameSpec, Player, TimeGrid};
