//! The two worked games bundled with the repository (`configs/`).
//!
//! * `example_6_1`: `dX = u₁ ds + u₂ dW` on `[0, 1]`,
//!   `J = E{−|X(1)|² + ∫ |u₁|² − |E u₂|² ds}`. Convex-concave but not
//!   uniformly so; open-loop solvable only at `x = 0`.
//! * `example_5_2`: `dX = (s u₁ + u₂) ds` on `[0, 1]`,
//!   `J = −|X(1)|² + ∫ s² |u₁|² ds`. The pair `(0, −1)` is a saddle at `x = 1`.

use crate::model::{config::parse_spec, GameSpec};

pub const EXAMPLE_6_1_JSON: &str = include_str!("../../../configs/example_6_1.json");
pub const EXAMPLE_5_2_JSON: &str = include_str!("../../../configs/example_5_2.json");

pub fn example_6_1() -> GameSpec {
    parse_spec(EXAMPLE_6_1_JSON).expect("bundled example 6.1 is valid")
}

pub fn example_5_2() -> GameSpec {
    parse_spec(EXAMPLE_5_2_JSON).expect("bundled example 5.2 is valid")
}

/// Closed forms for the perturbed family of `example_6_1`.
pub mod closed_form_6_1 {
    /// `P_ε(s) = Π_ε(s) = −(1+ε)/(s+ε)`.
    pub fn riccati(eps: f64, s: f64) -> f64 {
        -(1.0 + eps) / (s + eps)
    }

    /// First component of `Θ_ε(s) = Θ̄_ε(s) = (1/(s+ε), 0)ᵀ`.
    pub fn gain(eps: f64, s: f64) -> f64 {
        1.0 / (s + eps)
    }

    /// Closed-loop state `X_ε(s) = (s+ε)x/ε`.
    pub fn state(eps: f64, s: f64, x: f64) -> f64 {
        (s + eps) * x / eps
    }

    /// `E∫|u_ε|² = x²/ε²` (the control is the constant `(x/ε, 0)`).
    pub fn control_norm_sq(eps: f64, x: f64) -> f64 {
        x * x / (eps * eps)
    }
}
