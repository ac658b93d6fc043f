use std::fmt;

use serde::Serialize;

use super::path::{CoefficientPath, Side};
use crate::error::{Error, Result};
use crate::linalg::{self, block_diag, hcat, vcat, Mat};

/// Absolute tolerance for user-supplied matrices that must be symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    /// `(-1)^{i+1}`: +1 for the minimizer, -1 for the maximizer.
    pub fn sign(self) -> f64 {
        match self {
            Player::One => 1.0,
            Player::Two => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::One => write!(f, "1"),
            Player::Two => write!(f, "2"),
        }
    }
}

/// The twelve coefficient paths of the controlled mean-field state equation.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCoefficients {
    pub a: CoefficientPath,
    pub a_bar: CoefficientPath,
    pub b1: CoefficientPath,
    pub b1_bar: CoefficientPath,
    pub b2: CoefficientPath,
    pub b2_bar: CoefficientPath,
    pub c: CoefficientPath,
    pub c_bar: CoefficientPath,
    pub d1: CoefficientPath,
    pub d1_bar: CoefficientPath,
    pub d2: CoefficientPath,
    pub d2_bar: CoefficientPath,
}

/// Weights of the quadratic functional. `R₂₁` and `R̄₂₁` are never stored;
/// they are the transposes of `R₁₂` and `R̄₁₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    pub g: Mat,
    pub g_bar: Mat,
    pub q: CoefficientPath,
    pub q_bar: CoefficientPath,
    pub s1: CoefficientPath,
    pub s1_bar: CoefficientPath,
    pub s2: CoefficientPath,
    pub s2_bar: CoefficientPath,
    pub r11: CoefficientPath,
    pub r12: CoefficientPath,
    pub r22: CoefficientPath,
    pub r11_bar: CoefficientPath,
    pub r12_bar: CoefficientPath,
    pub r22_bar: CoefficientPath,
}

impl CostWeights {
    pub fn r21(&self) -> CoefficientPath {
        self.r12.transpose()
    }

    pub fn r21_bar(&self) -> CoefficientPath {
        self.r12_bar.transpose()
    }

    pub fn r21_at(&self, t: f64) -> Mat {
        self.r12.value(t).transpose()
    }
}

/// A two-person zero-sum mean-field LQ game on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    pub horizon: f64,
    pub coefficients: StateCoefficients,
    pub weights: CostWeights,
}

/// All coefficients at one instant, with the two players' channels stacked:
/// `B = (B₁, B₂)`, `D = (D₁, D₂)`, `S = (S₁; S₂)`, `R = (R₁₁ R₁₂; R₂₁ R₂₂)`.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub a: Mat,
    pub a_bar: Mat,
    pub b: Mat,
    pub b_bar: Mat,
    pub c: Mat,
    pub c_bar: Mat,
    pub d: Mat,
    pub d_bar: Mat,
    pub q: Mat,
    pub q_bar: Mat,
    pub s: Mat,
    pub s_bar: Mat,
    pub r: Mat,
    pub r_bar: Mat,
}

impl Snapshot {
    /// Running-cost weight on `(x, u)`.
    pub fn running_weight(&self) -> Mat {
        let top = hcat(&self.q, &self.s.transpose());
        let bottom = hcat(&self.s, &self.r);
        vcat(&top, &bottom)
    }

    /// Mean-field running-cost weight on `(E[x], E[u])`.
    pub fn running_weight_bar(&self) -> Mat {
        let top = hcat(&self.q_bar, &self.s_bar.transpose());
        let bottom = hcat(&self.s_bar, &self.r_bar);
        vcat(&top, &bottom)
    }
}

impl GameSpec {
    /// A game with every coefficient and weight identically zero.
    pub fn zeros(n: usize, m1: usize, m2: usize, horizon: f64) -> Self {
        let z = CoefficientPath::zeros;
        Self {
            n,
            m1,
            m2,
            horizon,
            coefficients: StateCoefficients {
                a: z(n, n),
                a_bar: z(n, n),
                b1: z(n, m1),
                b1_bar: z(n, m1),
                b2: z(n, m2),
                b2_bar: z(n, m2),
                c: z(n, n),
                c_bar: z(n, n),
                d1: z(n, m1),
                d1_bar: z(n, m1),
                d2: z(n, m2),
                d2_bar: z(n, m2),
            },
            weights: CostWeights {
                g: Mat::zeros(n, n),
                g_bar: Mat::zeros(n, n),
                q: z(n, n),
                q_bar: z(n, n),
                s1: z(m1, n),
                s1_bar: z(m1, n),
                s2: z(m2, n),
                s2_bar: z(m2, n),
                r11: z(m1, m1),
                r12: z(m1, m2),
                r22: z(m2, m2),
                r11_bar: z(m1, m1),
                r12_bar: z(m1, m2),
                r22_bar: z(m2, m2),
            },
        }
    }

    /// `m₁ + m₂`.
    pub fn control_dim(&self) -> usize {
        self.m1 + self.m2
    }

    pub fn player_dim(&self, p: Player) -> usize {
        match p {
            Player::One => self.m1,
            Player::Two => self.m2,
        }
    }

    /// Offset of player `p`'s block inside the stacked control.
    pub fn player_offset(&self, p: Player) -> usize {
        match p {
            Player::One => 0,
            Player::Two => self.m1,
        }
    }

    pub fn snapshot(&self, t: f64) -> Snapshot {
        self.snapshot_side(t, Side::Right)
    }

    pub fn snapshot_side(&self, t: f64, side: Side) -> Snapshot {
        let c = &self.coefficients;
        let w = &self.weights;
        let v = |p: &CoefficientPath| p.value_side(t, side);
        let r12 = v(&w.r12);
        let r12_bar = v(&w.r12_bar);
        Snapshot {
            a: v(&c.a),
            a_bar: v(&c.a_bar),
            b: hcat(&v(&c.b1), &v(&c.b2)),
            b_bar: hcat(&v(&c.b1_bar), &v(&c.b2_bar)),
            c: v(&c.c),
            c_bar: v(&c.c_bar),
            d: hcat(&v(&c.d1), &v(&c.d2)),
            d_bar: hcat(&v(&c.d1_bar), &v(&c.d2_bar)),
            q: v(&w.q),
            q_bar: v(&w.q_bar),
            s: vcat(&v(&w.s1), &v(&w.s2)),
            s_bar: vcat(&v(&w.s1_bar), &v(&w.s2_bar)),
            r: vcat(&hcat(&v(&w.r11), &r12), &hcat(&r12.transpose(), &v(&w.r22))),
            r_bar: vcat(&hcat(&v(&w.r11_bar), &r12_bar), &hcat(&r12_bar.transpose(), &v(&w.r22_bar))),
        }
    }

    /// Every coefficient and weight path, labelled with its config key.
    pub fn named_paths(&self) -> Vec<(&'static str, &CoefficientPath)> {
        let c = &self.coefficients;
        let w = &self.weights;
        vec![
            ("A", &c.a),
            ("Abar", &c.a_bar),
            ("B1", &c.b1),
            ("B1bar", &c.b1_bar),
            ("B2", &c.b2),
            ("B2bar", &c.b2_bar),
            ("C", &c.c),
            ("Cbar", &c.c_bar),
            ("D1", &c.d1),
            ("D1bar", &c.d1_bar),
            ("D2", &c.d2),
            ("D2bar", &c.d2_bar),
            ("Q", &w.q),
            ("Qbar", &w.q_bar),
            ("S1", &w.s1),
            ("S1bar", &w.s1_bar),
            ("S2", &w.s2),
            ("S2bar", &w.s2_bar),
            ("R11", &w.r11),
            ("R12", &w.r12),
            ("R22", &w.r22),
            ("R11bar", &w.r11_bar),
            ("R12bar", &w.r12_bar),
            ("R22bar", &w.r22_bar),
        ]
    }

    fn expected_shape(&self, key: &str) -> (usize, usize) {
        let (n, m1, m2) = (self.n, self.m1, self.m2);
        match key {
            "A" | "Abar" | "C" | "Cbar" | "Q" | "Qbar" | "G" | "Gbar" => (n, n),
            "B1" | "B1bar" | "D1" | "D1bar" => (n, m1),
            "B2" | "B2bar" | "D2" | "D2bar" => (n, m2),
            "S1" | "S1bar" => (m1, n),
            "S2" | "S2bar" => (m2, n),
            "R11" | "R11bar" => (m1, m1),
            "R12" | "R12bar" => (m1, m2),
            "R22" | "R22bar" => (m2, m2),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Runs [`validate_spec`] and converts failures into an error.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_spec(self);
        if report.passed() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(report.summary()))
        }
    }

    /// Validates, then replaces every symmetric-valued matrix by its
    /// symmetric part so that downstream code sees exact symmetry.
    pub fn validated(mut self) -> Result<Self> {
        self.ensure_valid()?;
        self.weights.g = linalg::symmetrize(&self.weights.g);
        self.weights.g_bar = linalg::symmetrize(&self.weights.g_bar);
        let w = &mut self.weights;
        for p in [&mut w.q, &mut w.q_bar, &mut w.r11, &mut w.r22, &mut w.r11_bar, &mut w.r22_bar] {
            *p = p.symmetrized();
        }
        Ok(self)
    }

    /// `true` when every barred (mean-field) coefficient and weight vanishes.
    pub fn is_bar_free(&self) -> bool {
        let c = &self.coefficients;
        let w = &self.weights;
        [&c.a_bar, &c.b1_bar, &c.b2_bar, &c.c_bar, &c.d1_bar, &c.d2_bar]
            .iter()
            .chain([&w.q_bar, &w.s1_bar, &w.s2_bar, &w.r11_bar, &w.r12_bar, &w.r22_bar].iter())
            .all(|p| p.is_zero())
            && w.g_bar.iter().all(|v| *v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IssueKind {
    Dimension,
    Shape,
    Symmetry,
    Breakpoints,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationIssue {
    pub field: String,
    pub kind: IssueKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
    /// Largest absolute entry over all stored data; reported, never rejected.
    pub max_abs_entry: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has(&self, kind: IssueKind) -> bool {
        self.issues.iter().any(|i| i.kind == kind)
    }

    pub fn summary(&self) -> String {
        self.issues
            .iter()
            .map(|i| format!("{}: {}", i.field, i.message))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Checks the structural assumptions on coefficients and weights: shapes,
/// symmetry (absolute tolerance [`SYMMETRY_TOL`]), breakpoint ordering and
/// finiteness. Never fails; problems are collected into the report.
pub fn validate_spec(spec: &GameSpec) -> ValidationReport {
    let mut issues = Vec::new();
    let mut push = |field: &str, kind: IssueKind, message: String| {
        issues.push(ValidationIssue { field: field.to_string(), kind, message });
    };

    if spec.n == 0 || spec.m1 == 0 || spec.m2 == 0 {
        push("dims", IssueKind::Dimension, format!("dimensions must be positive, got ({}, {}, {})", spec.n, spec.m1, spec.m2));
    }
    if !(spec.horizon > 0.0 && spec.horizon.is_finite()) {
        push("horizon", IssueKind::Dimension, format!("horizon must be positive, got {}", spec.horizon));
    }

    let mut max_abs = 0.0_f64;
    for (key, m) in [("G", &spec.weights.g), ("Gbar", &spec.weights.g_bar)] {
        if m.shape() != spec.expected_shape(key) {
            push(key, IssueKind::Shape, format!("expected {:?}, got {:?}", spec.expected_shape(key), m.shape()));
        } else if linalg::asymmetry(m) > SYMMETRY_TOL {
            push(key, IssueKind::Symmetry, format!("asymmetry {:.3e}", linalg::asymmetry(m)));
        }
        if m.iter().any(|v| !v.is_finite()) {
            push(key, IssueKind::NonFinite, "non-finite entry".into());
        }
        max_abs = max_abs.max(m.amax());
    }

    for (key, path) in spec.named_paths() {
        let expected = spec.expected_shape(key);
        if path.shape() != expected {
            push(key, IssueKind::Shape, format!("expected {:?}, got {:?}", expected, path.shape()));
        }
        for msg in path.issues(spec.horizon) {
            let kind = if msg.contains("shape") {
                IssueKind::Shape
            } else if msg.contains("finite") {
                IssueKind::NonFinite
            } else {
                IssueKind::Breakpoints
            };
            push(key, kind, msg);
        }
        if matches!(key, "Q" | "Qbar" | "R11" | "R22" | "R11bar" | "R22bar") && path.rows() == path.cols() {
            let asym = path.max_asymmetry();
            if asym > SYMMETRY_TOL {
                push(key, IssueKind::Symmetry, format!("asymmetry {asym:.3e}"));
            }
        }
        for m in path.matrices() {
            max_abs = max_abs.max(m.amax());
        }
    }

    ValidationReport { issues, max_abs_entry: max_abs }
}

/// The same game with every mean-field term removed.
pub fn specialize_no_meanfield(spec: &GameSpec) -> GameSpec {
    let mut out = spec.clone();
    let zero = |p: &CoefficientPath| CoefficientPath::zeros(p.rows(), p.cols());
    let c = &mut out.coefficients;
    for p in [&mut c.a_bar, &mut c.b1_bar, &mut c.b2_bar, &mut c.c_bar, &mut c.d1_bar, &mut c.d2_bar] {
        *p = zero(p);
    }
    let w = &mut out.weights;
    for p in [&mut w.q_bar, &mut w.s1_bar, &mut w.s2_bar, &mut w.r11_bar, &mut w.r12_bar, &mut w.r22_bar] {
        *p = zero(p);
    }
    w.g_bar = Mat::zeros(w.g_bar.nrows(), w.g_bar.ncols());
    out
}

/// Regularized game: `R₁₁ ← R₁₁ + εI`, `R₂₂ ← R₂₂ − εI`.
pub fn embed_perturbation(spec: &GameSpec, eps: f64) -> Result<GameSpec> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("perturbation must be positive, got {eps}")));
    }
    let mut out = spec.clone();
    let w = &mut out.weights;
    w.r11 = w.r11.add_constant(&(Mat::identity(spec.m1, spec.m1) * eps));
    w.r22 = w.r22.add_constant(&(Mat::identity(spec.m2, spec.m2) * -eps));
    Ok(out)
}

/// `R + εJ` with `J = diag(I_{m₁}, −I_{m₂})`, used by snapshot consumers.
pub fn perturbation_block(m1: usize, m2: usize, eps: f64) -> Mat {
    block_diag(&(Mat::identity(m1, m1) * eps), &(Mat::identity(m2, m2) * -eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn example_61_is_valid() {
        let report = validate_spec(&examples::example_6_1());
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn asymmetric_q_breakpoint_fails() {
        let mut spec = GameSpec::zeros(2, 1, 1, 1.0);
        let sym = Mat::identity(2, 2);
        let asym = Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        spec.weights.q = CoefficientPath::piecewise(vec![(0.0, sym), (0.5, asym)]).unwrap();
        let report = validate_spec(&spec);
        assert!(!report.passed());
        assert!(report.has(IssueKind::Symmetry));
    }

    #[test]
    fn misshaped_b1_fails() {
        let mut spec = examples::example_6_1();
        spec.coefficients.b1 = CoefficientPath::zeros(1, 2);
        let report = validate_spec(&spec);
        assert!(report.has(IssueKind::Shape));
        assert!(spec.ensure_valid().is_err());
    }

    #[test]
    fn specialization_zeroes_bars_and_is_idempotent() {
        let spec = examples::example_6_1();
        let sg = specialize_no_meanfield(&spec);
        assert!(sg.is_bar_free());
        assert_eq!(sg.weights.r22_bar, CoefficientPath::zeros(1, 1));
        let mut expected = spec.clone();
        expected.weights.r22_bar = CoefficientPath::zeros(1, 1);
        assert_eq!(sg, expected);
        assert_eq!(specialize_no_meanfield(&sg), sg);
    }

    #[test]
    fn perturbation_shifts_diagonal_blocks() {
        let spec = examples::example_6_1();
        let e = embed_perturbation(&spec, 0.5).unwrap();
        assert_eq!(e.weights.r11.value(0.3)[(0, 0)], 1.5);
        assert_eq!(e.weights.r22.value(0.3)[(0, 0)], -0.5);
        assert!(embed_perturbation(&spec, 0.0).is_err());
        assert!(embed_perturbation(&spec, -1.0).is_err());
    }

    #[test]
    fn perturbation_of_example_52_keeps_polynomial_weight() {
        let e = embed_perturbation(&examples::example_5_2(), 0.1).unwrap();
        for s in [0.0, 0.3, 1.0] {
            assert!((e.weights.r11.value(s)[(0, 0)] - (s * s + 0.1)).abs() < 1e-15);
            assert!((e.weights.r22.value(s)[(0, 0)] + 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn perturbation_is_additive() {
        let spec = examples::example_5_2();
        let twice = embed_perturbation(&embed_perturbation(&spec, 0.25).unwrap(), 0.5).unwrap();
        let once = embed_perturbation(&spec, 0.75).unwrap();
        assert_eq!(twice, once);
    }

    #[test]
    fn r21_is_exact_transpose() {
        let mut spec = GameSpec::zeros(1, 2, 3, 1.0);
        spec.weights.r12 = CoefficientPath::constant(Mat::from_fn(2, 3, |i, j| 0.1 * (i as f64) + 0.37 * j as f64));
        let r21 = spec.weights.r21_at(0.4);
        assert_eq!(r21, spec.weights.r12.value(0.4).transpose());
        let snap = spec.snapshot(0.4);
        assert_eq!(snap.r.view((2, 0), (3, 2)).into_owned(), r21);
    }
}
