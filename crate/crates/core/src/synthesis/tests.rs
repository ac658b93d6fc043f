use std::sync::Arc;

use super::*;
use crate::examples::{closed_form_6_1, example_5_2, example_6_1};
use crate::instances::coupled_instance;
use crate::linalg::{Mat, Vector};
use crate::model::{embed_perturbation, CoefficientPath, GameSpec, Player, TimeGrid};
use crate::riccati::{EquationKind, RiccatiOptions, RiccatiSolution};

fn opts() -> RiccatiOptions {
    RiccatiOptions::default()
}

fn saddle_6_1(eps: f64, steps: usize) -> (GameSpec, TimeGrid, Arc<FeedbackLaw>) {
    let spec = embed_perturbation(&example_6_1(), eps).unwrap();
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let law = synthesize(&spec, &grid, &opts()).unwrap();
    (spec, grid, law)
}

fn x1(v: f64) -> Vector {
    Vector::from_element(1, v)
}

fn constant_offset(spec: &GameSpec, values: &[f64]) -> OffsetPath {
    OffsetPath::from_source(VectorSource::Path(CoefficientPath::constant(Mat::from_column_slice(
        spec.control_dim(),
        1,
        values,
    ))))
    .unwrap()
}

/// `dX = u₂ dW` with `G = −1` and nothing else.
fn brownian_game() -> GameSpec {
    let mut spec = GameSpec::zeros(1, 1, 1, 1.0);
    spec.coefficients.d2 = CoefficientPath::scalar(1.0);
    spec.weights.g = Mat::from_element(1, 1, -1.0);
    spec.weights.r11 = CoefficientPath::scalar(1.0);
    spec.weights.r22 = CoefficientPath::scalar(-1.0);
    spec
}

#[test]
fn example_feedback_matches_closed_form() {
    for eps in [1.0, 0.5, 0.25, 0.1] {
        let (_, grid, law) = saddle_6_1(eps, 1000);
        for k in 0..grid.len() {
            let s = grid.node(k);
            for g in [&law.theta[k], &law.theta_bar[k]] {
                assert!((g[(0, 0)] - closed_form_6_1::gain(eps, s)).abs() <= 1e-6);
                assert_eq!(g[(1, 0)], 0.0);
            }
        }
        let (th, _) = law.gains_at(0.12345, crate::model::Side::Right).unwrap();
        assert!((th[(0, 0)] - closed_form_6_1::gain(eps, 0.12345)).abs() <= 1e-6);
    }
}

#[test]
fn null_feedback() {
    let mut spec = GameSpec::zeros(1, 1, 1, 1.0);
    spec.coefficients.b1 = CoefficientPath::scalar(1.0);
    spec.coefficients.d2 = CoefficientPath::scalar(0.5);
    spec.weights.r11 = CoefficientPath::scalar(1.0);
    spec.weights.r22 = CoefficientPath::scalar(-1.0);
    let grid = TimeGrid::new(1.0, 10).unwrap();
    let zero = RiccatiSolution::from_values(EquationKind::Game, grid, vec![Mat::zeros(1, 1); 11]).unwrap();
    let law = build_feedback(&spec, &zero, &zero, &opts()).unwrap();
    assert!(law.theta.iter().chain(&law.theta_bar).all(|g| g.iter().all(|v| *v == 0.0)));
    assert_eq!(stationarity_residual(&spec, &law, &zero, &zero), 0.0);
}


#[test]
fn feedback_identities_hold() {
    let spec = coupled_instance();
    let grid = TimeGrid::new(1.0, 400).unwrap();
    let law = synthesize(&spec, &grid, &opts()).unwrap();
    assert!(stationarity_residual(&spec, &law, law.p(), law.pi()) <= 1e-9);
}

#[test]
fn perturbed_gain_is_detected() {
    let (spec, _, law) = saddle_6_1(0.5, 200);
    let mut bad = (*law).clone();
    for th in &mut bad.theta {
        th[(0, 0)] += 0.01;
    }
    let min_sv = law.sigma.iter().map(|s| s.symmetric_eigenvalues().abs().min()).fold(f64::INFINITY, f64::min);
    assert!(stationarity_residual(&spec, &bad, law.p(), law.pi()) >= 0.005 * min_sv);
}

#[test]
fn zero_game_has_zero_residual() {
    let mut spec = GameSpec::zeros(1, 1, 1, 1.0);
    spec.weights.r11 = CoefficientPath::scalar(1.0);
    spec.weights.r22 = CoefficientPath::scalar(-1.0);
    let grid = TimeGrid::new(1.0, 20).unwrap();
    let law = synthesize(&spec, &grid, &opts()).unwrap();
    assert_eq!(stationarity_residual(&spec, &law, law.p(), law.pi()), 0.0);
}

#[test]
fn closed_loop_moments_of_the_example() {
    let eps = 0.5;
    let (spec, grid, law) = saddle_6_1(eps, 1000);
    let st = propagate_moments(&spec, &ControlLaw::feedback(law), &x1(1.0), &grid).unwrap();
    for (k, &s) in st.times.iter().enumerate() {
        assert!((st.mean[k][0] - closed_form_6_1::state(eps, s, 1.0)).abs() <= 1e-6);
        assert_eq!(st.cov[k][(0, 0)], 0.0);
        assert!((st.control_mean[k][0] - 1.0 / eps).abs() <= 1e-6);
    }
}

#[test]
fn moments_without_dynamics() {
    let spec = GameSpec::zeros(2, 1, 1, 1.0);
    let grid = TimeGrid::new(1.0, 10).unwrap();
    let x = Vector::from_column_slice(&[1.0, -2.0]);
    let st = propagate_moments(&spec, &ControlLaw::zero(&spec), &x, &grid).unwrap();
    assert!(st.mean.iter().all(|m| *m == x));
    assert!(st.cov.iter().all(|c| c.iter().all(|v| *v == 0.0)));
}

#[test]
fn brownian_variance_growth() {
    let spec = brownian_game();
    let grid = TimeGrid::new(1.0, 100).unwrap();
    let law = ControlLaw::open_loop(constant_offset(&spec, &[0.0, 1.0]));
    let st = propagate_moments(&spec, &law, &x1(0.0), &grid).unwrap();
    for (k, &t) in st.times.iter().enumerate() {
        assert!((st.cov[k][(0, 0)] - t).abs() <= 1e-8);
    }
    assert!(st.cov.iter().all(|c| c.symmetric_eigenvalues().min() >= -1e-10));
    let csv = st.to_csv();
    assert!(csv.starts_with("t,m_0,L_0_0\n"));
}

#[test]
fn saddle_value_of_the_example() {
    for eps in [1.0, 0.5, 0.1] {
        let (spec, grid, law) = saddle_6_1(eps, 2000);
        let v = evaluate_functional(&spec, &ControlLaw::feedback(law.clone()), &x1(1.0), &grid).unwrap();
        assert!((v.value + (1.0 + eps) / eps).abs() <= 1e-5, "eps {eps}: {}", v.value);
        assert!((law.value_at(&x1(1.0)) - v.value).abs() <= 1e-5);
        assert_eq!(v.stderr, 0.0);
        assert_eq!(v.method, Method::Moments);
    }
}

#[test]
fn value_of_trivial_controls() {
    let spec = example_6_1();
    let grid = TimeGrid::new(1.0, 50).unwrap();
    assert_eq!(evaluate_functional(&spec, &ControlLaw::zero(&spec), &x1(0.0), &grid).unwrap().value, 0.0);

    let spec = example_5_2();
    let grid = TimeGrid::new(1.0, 200).unwrap();
    let law = ControlLaw::open_loop(constant_offset(&spec, &[0.0, -1.0]));
    let v = evaluate_functional(&spec, &law, &x1(1.0), &grid).unwrap();
    assert!(v.value.abs() < 1e-12, "{}", v.value);
}

#[test]
fn monte_carlo_on_a_deterministic_closed_loop() {
    let (spec, grid, law) = saddle_6_1(0.5, 1000);
    let law = ControlLaw::feedback(law);
    let exact = evaluate_functional(&spec, &law, &x1(1.0), &grid).unwrap();
    let mc = evaluate_functional_mc(&spec, &law, &x1(1.0), &grid, &NoiseBundle::new(7, 10_000)).unwrap();
    assert_eq!(mc.stderr, 0.0);
    assert!((mc.value - exact.value).abs() <= 3.0 * mc.stderr + 1e-12);
    assert!((mc.value + 3.0).abs() <= 1e-5);
}

#[test]
fn monte_carlo_on_brownian_terminal_cost() {
    let spec = brownian_game();
    let grid = TimeGrid::new(1.0, 200).unwrap();
    let law = ControlLaw::open_loop(constant_offset(&spec, &[0.0, 1.0]));
    let noise = NoiseBundle::new(11, 10_000);
    let exact = evaluate_functional(&spec, &law, &x1(0.0), &grid).unwrap();
    // −E X(1)² − ∫(E u₂)² = −1 − 1.
    assert!((exact.value + 2.0).abs() < 1e-12);
    assert!((exact.terms.terminal_fluctuation + 1.0).abs() < 1e-12);
    let mc = evaluate_functional_mc(&spec, &law, &x1(0.0), &grid, &noise).unwrap();
    assert!(mc.stderr > 0.0);
    assert!((mc.value - exact.value).abs() <= 3.0 * mc.stderr, "{} ± {}", mc.value, mc.stderr);
    let again = evaluate_functional_mc(&spec, &law, &x1(0.0), &grid, &noise).unwrap();
    assert_eq!(mc.value.to_bits(), again.value.to_bits());
}

#[test]
fn noise_bundle_is_reproducible() {
    let grid = TimeGrid::new(1.0, 1000).unwrap();
    let noise = NoiseBundle::new(3, 4);
    assert_eq!(noise.increments(2, &grid), noise.increments(2, &grid));
    assert_ne!(noise.increments(1, &grid), noise.increments(2, &grid));
    let dw = noise.increments(0, &grid);
    let var = dw.iter().map(|d| d * d).sum::<f64>();
    assert!((var - 1.0).abs() < 0.2);
}

#[test]
fn saddle_at_the_origin_of_the_example() {
    let spec = example_6_1();
    let grid = TimeGrid::new(1.0, 400).unwrap();
    let rep = verify_saddle(
        &spec,
        &ControlLaw::zero(&spec),
        &x1(0.0),
        &grid,
        &default_directions(&spec),
        &DEFAULT_LAMBDAS,
        1e-6,
    )
    .unwrap();
    assert!(rep.passed);
    assert_eq!(rep.entries.len(), 2 * 6 * 2);
    for e in &rep.entries {
        assert_eq!(e.linear, 0.0);
        match e.player {
            Player::One => assert!(e.quadratic >= -1e-12),
            Player::Two => assert!(e.quadratic <= -1.0),
        }
    }
}

#[test]
fn known_saddle_of_the_deterministic_example() {
    let spec = example_5_2();
    let grid = TimeGrid::new(1.0, 2000).unwrap();
    let law = ControlLaw::open_loop(constant_offset(&spec, &[0.0, -1.0]));
    let rep =
        verify_saddle(&spec, &law, &x1(1.0), &grid, &default_directions(&spec), &DEFAULT_LAMBDAS, 1e-6).unwrap();
    assert!(rep.passed, "{rep:#?}");
}

#[test]
fn zero_is_not_a_saddle_away_from_the_origin() {
    let spec = example_6_1();
    let grid = TimeGrid::new(1.0, 400).unwrap();
    let rep = verify_saddle(
        &spec,
        &ControlLaw::zero(&spec),
        &x1(1.0),
        &grid,
        &default_directions(&spec),
        &DEFAULT_LAMBDAS,
        1e-6,
    )
    .unwrap();
    assert!(!rep.passed);
    // J(1; λ·1, 0) = λ² − (1 + λ)², so the constant direction has linear term −1.
    let e = rep.entries.iter().find(|e| e.player == Player::One && e.direction.ends_with("constant")).unwrap();
    assert!((e.linear + 1.0).abs() < 1e-9);
    assert!(rep.entries.iter().filter(|e| e.player == Player::Two).all(|e| e.linear.abs() < 1e-9));
}

#[test]
fn synthesized_feedback_passes_verification() {
    let spec = coupled_instance();
    let grid = TimeGrid::new(1.0, 400).unwrap();
    let law = ControlLaw::feedback(synthesize(&spec, &grid, &opts()).unwrap());
    let x = Vector::from_column_slice(&[1.0, -0.5]);
    let rep = verify_saddle(&spec, &law, &x, &grid, &default_directions(&spec), &[1.0], 1e-6).unwrap();
    assert!(rep.passed, "max linear {}", rep.max_abs_linear);
}

#[test]
fn distances_between_laws() {
    let (spec, grid, law) = saddle_6_1(0.1, 500);
    let a = ControlLaw::feedback(law);
    assert_eq!(control_distance_sq(&spec, &a, &a.clone(), &x1(1.0), &grid).unwrap(), 0.0);
    let b = ControlLaw::feedback(saddle_6_1(0.05, 500).2);
    let d = control_distance_sq(&spec, &a, &b, &x1(1.0), &grid).unwrap().sqrt();
    assert!((d - 10.0).abs() < 1e-5, "{d}");
    let n = control_norm_sq(&spec, &a, &x1(1.0), &grid).unwrap();
    assert!((n - closed_form_6_1::control_norm_sq(0.1, 1.0)).abs() < 1e-4);
}

#[test]
fn feedback_csv_layout() {
    let (_, _, law) = saddle_6_1(1.0, 4);
    let csv = law.to_csv();
    assert!(csv.starts_with("t,Theta_0_0,Theta_1_0,ThetaBar_0_0,ThetaBar_1_0\n"));
    assert_eq!(csv.lines().count(), 6);
}
