//! Test instances: a fixed coupled game and a seeded generator of small,
//! uniformly convex-concave games.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Mat;
use crate::model::{CoefficientPath, GameSpec};

/// Two-dimensional game with every coupling switched on (mean-field terms,
/// cross weights, time-varying diffusion).
pub fn coupled_instance() -> GameSpec {
    let mut spec = GameSpec::zeros(2, 1, 1, 1.0);
    let c = &mut spec.coefficients;
    c.a = CoefficientPath::constant(Mat::from_row_slice(2, 2, &[0.2, 0.1, -0.3, 0.0]));
    c.a_bar = CoefficientPath::constant(Mat::from_row_slice(2, 2, &[0.05, 0.0, 0.1, -0.1]));
    c.b1 = CoefficientPath::constant(Mat::from_row_slice(2, 1, &[1.0, 0.3]));
    c.b2 = CoefficientPath::constant(Mat::from_row_slice(2, 1, &[-0.2, 0.8]));
    c.b1_bar = CoefficientPath::constant(Mat::from_row_slice(2, 1, &[0.1, 0.0]));
    c.c = CoefficientPath::constant(Mat::from_row_slice(2, 2, &[0.2, 0.0, 0.1, 0.3]));
    c.c_bar = CoefficientPath::constant(Mat::from_row_slice(2, 2, &[0.0, 0.1, 0.0, 0.0]));
    c.d1 = CoefficientPath::constant(Mat::from_row_slice(2, 1, &[0.2, 0.1]));
    c.d2 = CoefficientPath::polynomial(vec![Mat::from_row_slice(2, 1, &[0.1, 0.3]), Mat::from_row_slice(2, 1, &[0.2, 0.0])])
        .expect("non-empty");
    c.d2_bar = CoefficientPath::constant(Mat::from_row_slice(2, 1, &[0.0, 0.1]));
    let w = &mut spec.weights;
    w.g = Mat::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.2]);
    w.g_bar = Mat::from_row_slice(2, 2, &[0.1, 0.0, 0.0, -0.05]);
    w.q = CoefficientPath::constant(Mat::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.4]));
    w.q_bar = CoefficientPath::constant(Mat::from_row_slice(2, 2, &[0.1, 0.0, 0.0, 0.1]));
    w.s1 = CoefficientPath::constant(Mat::from_row_slice(1, 2, &[0.1, -0.1]));
    w.s2_bar = CoefficientPath::constant(Mat::from_row_slice(1, 2, &[0.05, 0.0]));
    w.r11 = CoefficientPath::scalar(1.5);
    w.r12 = CoefficientPath::scalar(0.1);
    w.r22 = CoefficientPath::scalar(-1.6);
    w.r11_bar = CoefficientPath::scalar(0.2);
    w.r22_bar = CoefficientPath::scalar(-0.1);
    spec
}

fn small(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

fn small_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Mat {
    let m = small(rng, n, n, scale);
    (&m + m.transpose()) * 0.5
}

/// Either a constant or a linear-in-time path with small entries.
fn small_path(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> CoefficientPath {
    if rng.random_bool(0.3) {
        CoefficientPath::polynomial(vec![small(rng, rows, cols, scale), small(rng, rows, cols, scale)])
            .expect("non-empty")
    } else {
        CoefficientPath::constant(small(rng, rows, cols, scale))
    }
}

/// A game with `n ∈ 1..=3`, `mᵢ ∈ 1..=2`, horizon 1 and small data around
/// dominant control weights `R₁₁ ≈ 2I`, `R₂₂ ≈ −2I`. The state influence on
/// the cost is too weak to overturn the control weights, so the game is
/// uniformly convex-concave and both Riccati equations are strongly regular.
pub fn random_convex_concave(seed: u64) -> GameSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=3);
    let m1 = rng.random_range(1..=2);
    let m2 = rng.random_range(1..=2);
    let mut spec = GameSpec::zeros(n, m1, m2, 1.0);
    let r = &mut rng;
    let c = &mut spec.coefficients;
    c.a = small_path(r, n, n, 0.5);
    c.a_bar = small_path(r, n, n, 0.2);
    c.b1 = small_path(r, n, m1, 0.5);
    c.b2 = small_path(r, n, m2, 0.5);
    c.b1_bar = small_path(r, n, m1, 0.1);
    c.b2_bar = small_path(r, n, m2, 0.1);
    c.c = small_path(r, n, n, 0.2);
    c.c_bar = small_path(r, n, n, 0.1);
    c.d1 = small_path(r, n, m1, 0.2);
    c.d2 = small_path(r, n, m2, 0.2);
    c.d1_bar = small_path(r, n, m1, 0.05);
    c.d2_bar = small_path(r, n, m2, 0.05);
    let w = &mut spec.weights;
    w.g = small_sym(r, n, 0.1);
    w.g_bar = small_sym(r, n, 0.05);
    w.q = CoefficientPath::constant(small_sym(r, n, 0.1));
    w.q_bar = CoefficientPath::constant(small_sym(r, n, 0.05));
    w.s1 = small_path(r, m1, n, 0.1);
    w.s2 = small_path(r, m2, n, 0.1);
    w.s1_bar = small_path(r, m1, n, 0.05);
    w.s2_bar = small_path(r, m2, n, 0.05);
    w.r11 = CoefficientPath::constant(Mat::identity(m1, m1) * 2.0 + small_sym(r, m1, 0.1));
    w.r22 = CoefficientPath::constant(Mat::identity(m2, m2) * -2.0 + small_sym(r, m2, 0.1));
    w.r12 = CoefficientPath::constant(small(r, m1, m2, 0.1));
    w.r11_bar = CoefficientPath::constant(small_sym(r, m1, 0.05));
    w.r22_bar = CoefficientPath::constant(small_sym(r, m2, 0.05));
    w.r12_bar = CoefficientPath::constant(small(r, m1, m2, 0.05));
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_reproducible_and_valid() {
        for seed in 0..20 {
            let a = random_convex_concave(seed);
            assert_eq!(a.n, random_convex_concave(seed).n);
            a.validated().unwrap();
        }
    }
}
