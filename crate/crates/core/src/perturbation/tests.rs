use super::*;
use crate::examples::{closed_form_6_1, example_5_2, example_6_1};
use crate::instances::random_convex_concave;
use crate::linalg::Mat;
use crate::model::CoefficientPath;
use crate::synthesis::{OffsetPath, VectorSource};

fn grid(steps: usize) -> TimeGrid {
    TimeGrid::new(1.0, steps).unwrap()
}

fn x1(v: f64) -> Vector {
    Vector::from_element(1, v)
}

fn constant_pair() -> ControlLaw {
    let path = CoefficientPath::constant(Mat::from_column_slice(2, 1, &[0.0, -1.0]));
    ControlLaw::open_loop(OffsetPath::from_source(VectorSource::Path(path)).unwrap())
}

#[test]
fn schedule_values_and_validation() {
    let s = EpsSchedule::default();
    assert_eq!(s.values.len(), 14);
    assert_eq!(s.values[0], 0.5);
    assert_eq!(s.values[3], 0.0625);
    assert!(s.values.windows(2).all(|w| w[1] < w[0]));
    assert!(EpsSchedule::new(0.0, 0.5, 3).is_err());
    assert!(EpsSchedule::new(1.0, 1.0, 3).is_err());
    assert!(EpsSchedule::new(1.0, 0.5, 0).is_err());
}

#[test]
fn example_6_1_iterate_matches_closed_form() {
    let it = build_eps_iterate(&example_6_1(), 0.5, &grid(1000), &x1(1.0)).unwrap();
    assert!((it.norm_sq - closed_form_6_1::control_norm_sq(0.5, 1.0)).abs() < 1e-6, "{}", it.norm_sq);
    assert!((it.value + 3.0).abs() < 1e-6, "{}", it.value);
    let zero = build_eps_iterate(&example_6_1(), 0.1, &grid(200), &x1(0.0)).unwrap();
    assert_eq!(zero.norm_sq, 0.0);
}

#[test]
fn example_5_2_iterate_is_near_the_analytic_saddle() {
    let it = build_eps_iterate(&example_5_2(), 1e-3, &grid(1000), &x1(1.0)).unwrap();
    assert!((it.norm_sq - 1.0).abs() <= 0.05, "{}", it.norm_sq);
    assert!(it.norm_sq <= 1.0 + 1e-6);
}

#[test]
fn distances_between_iterates() {
    let (spec, g, x) = (example_6_1(), grid(1000), x1(1.0));
    let a = build_eps_iterate(&spec, 0.1, &g, &x).unwrap();
    let b = build_eps_iterate(&spec, 0.05, &g, &x).unwrap();
    assert_eq!(control_distance(&spec, &a, &a, &x, &g).unwrap(), 0.0);
    let d = control_distance(&spec, &a, &b, &x, &g).unwrap();
    assert!((d - 10.0).abs() < 1e-5, "{d}");
    assert!(matches!(control_distance(&spec, &a, &b, &x, &grid(500)), Err(Error::GridMismatch(_))));
}

#[test]
fn successive_distances_shrink_on_a_definite_instance() {
    let spec = random_convex_concave(3);
    let x = Vector::from_element(spec.n, 1.0);
    let schedule = EpsSchedule::new(0.4, 0.5, 5).unwrap();
    let report = classify_family(&spec, &schedule, &x, &grid(200), 1e-2).unwrap();
    assert!(report.distances.windows(2).all(|w| w[1] <= w[0]), "{:?}", report.distances);
    assert_eq!(report.verdict, Verdict::Solvable);
}

#[test]
fn exponent_fit() {
    let eps: Vec<f64> = (0..8).map(|k| 0.5f64.powi(k)).collect();
    let norms: Vec<f64> = eps.iter().map(|e| 3.0 / e).collect();
    let fit = fit_growth_exponent(&eps, &norms);
    assert!((fit.exponent - 1.0).abs() < 1e-12 && fit.points == FIT_POINTS);
    assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    assert_eq!(fit_growth_exponent(&eps, &[0.0; 8]).exponent, 0.0);
    assert!(fit_growth_exponent(&eps, &[2.0; 8]).exponent.abs() < 1e-12);
}

#[test]
fn example_6_1_is_not_solvable_away_from_the_origin() {
    let schedule = EpsSchedule::new(0.5, 0.5, 13).unwrap();
    let report = classify_family(&example_6_1(), &schedule, &x1(1.0), &grid(500), 1e-2).unwrap();
    assert_eq!(report.verdict, Verdict::NotSolvable);
    assert!((report.fit.exponent - 1.0).abs() <= 0.05, "{:?}", report.fit);
    assert!(report.limit.is_none() && report.saddle.is_none());
}

#[test]
fn example_6_1_is_solvable_at_the_origin() {
    let schedule = EpsSchedule::new(0.5, 0.5, 6).unwrap();
    let report = classify_family(&example_6_1(), &schedule, &x1(0.0), &grid(200), 1e-2).unwrap();
    assert_eq!(report.verdict, Verdict::Solvable);
    assert!(report.iterates.iter().all(|it| it.norm_sq == 0.0));
    assert!(report.saddle.as_ref().unwrap().passed);
    assert_eq!(report.limit_value, Some(0.0));
}

#[test]
fn example_5_2_family_converges_to_the_analytic_saddle() {
    let (spec, g, x) = (example_5_2(), grid(1000), x1(1.0));
    let schedule = EpsSchedule::new(0.5, 0.5, 10).unwrap();
    let report = classify_family(&spec, &schedule, &x, &g, 1e-2).unwrap();
    assert_eq!(report.verdict, Verdict::Solvable, "{}", report.to_json());
    let limit = report.limit.as_ref().unwrap();
    let d = control_distance_sq(&spec, limit, &constant_pair(), &x, &g).unwrap().sqrt();
    assert!(d <= 1e-2, "{d}");
    assert!(report.saddle.as_ref().unwrap().passed);
    assert!(report.iterates.iter().all(|it| it.norm() <= 1.0 + 1e-6));
    let gaps = report.value_gaps.as_ref().unwrap();
    assert!(*gaps.last().unwrap() <= 2e-3, "{gaps:?}");
}

#[test]
fn failures_carry_the_offending_eps() {
    let mut spec = example_6_1();
    spec.weights.r11 = CoefficientPath::scalar(0.0);
    spec.weights.g = Mat::from_element(1, 1, -10.0);
    let err = build_eps_iterate(&spec, 0.25, &grid(100), &x1(1.0)).unwrap_err();
    match err {
        Error::Iterate { eps, .. } => assert_eq!(eps, 0.25),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn report_exports_are_deterministic() {
    let schedule = EpsSchedule::new(0.5, 0.5, 4).unwrap();
    let run = || classify_family(&example_6_1(), &schedule, &x1(1.0), &grid(100), 1e-2).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.to_json(), b.to_json());
    let csv = a.to_csv();
    let first: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.5);
    assert!((first[1] - 2.0).abs() < 1e-6 && (first[2] + 3.0).abs() < 1e-6);
    assert_eq!(csv.lines().count(), 5);
}
