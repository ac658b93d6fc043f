use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Which one-sided limit to take when a path jumps exactly at the query time.
///
/// Paths are right-continuous, so `Right` is the value *at* a breakpoint;
/// integrators use `Left` for stage evaluations at the right end of a step so
/// that a step never sees the next interval's value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Side {
    Left,
    #[default]
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    Constant(Mat),
    /// `(start, value)` pairs; the value holds on `[start, next_start)`.
    Piecewise(Vec<(f64, Mat)>),
    /// Coefficients `C₀, C₁, …` of `Σ Cₖ tᵏ`.
    Polynomial(Vec<Mat>),
}

/// A deterministic, matrix-valued function of time.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPath {
    kind: PathKind,
    rows: usize,
    cols: usize,
}

impl CoefficientPath {
    pub fn constant(m: Mat) -> Self {
        let (rows, cols) = m.shape();
        Self { kind: PathKind::Constant(m), rows, cols }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(Mat::zeros(rows, cols))
    }

    pub fn scalar(v: f64) -> Self {
        Self::constant(Mat::from_element(1, 1, v))
    }

    /// Shape is taken from the first piece. Ordering and shape consistency
    /// are checked by [`CoefficientPath::issues`], not here.
    pub fn piecewise(pieces: Vec<(f64, Mat)>) -> Result<Self> {
        let (rows, cols) = pieces
            .first()
            .map(|(_, m)| m.shape())
            .ok_or_else(|| Error::InvalidArgument("piecewise path needs at least one piece".into()))?;
        Ok(Self { kind: PathKind::Piecewise(pieces), rows, cols })
    }

    pub fn polynomial(coefficients: Vec<Mat>) -> Result<Self> {
        let (rows, cols) = coefficients
            .first()
            .map(|m| m.shape())
            .ok_or_else(|| Error::InvalidArgument("polynomial path needs at least one coefficient".into()))?;
        Ok(Self { kind: PathKind::Polynomial(coefficients), rows, cols })
    }

    pub fn kind(&self) -> &PathKind {
        &self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Every matrix stored in the path.
    pub fn matrices(&self) -> Box<dyn Iterator<Item = &Mat> + '_> {
        match &self.kind {
            PathKind::Constant(m) => Box::new(std::iter::once(m)),
            PathKind::Piecewise(p) => Box::new(p.iter().map(|(_, m)| m)),
            PathKind::Polynomial(c) => Box::new(c.iter()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.matrices().all(|m| m.iter().all(|v| *v == 0.0))
    }

    pub fn is_constant(&self) -> bool {
        match &self.kind {
            PathKind::Constant(_) => true,
            PathKind::Piecewise(p) => p.len() == 1,
            PathKind::Polynomial(c) => c.iter().skip(1).all(|m| m.iter().all(|v| *v == 0.0)),
        }
    }

    /// Value at `t` (right-continuous). Defined for every real `t`; range
    /// checking against a horizon is done by [`CoefficientPath::eval_on`].
    pub fn value(&self, t: f64) -> Mat {
        self.value_side(t, Side::Right)
    }

    pub fn value_side(&self, t: f64, side: Side) -> Mat {
        match &self.kind {
            PathKind::Constant(m) => m.clone(),
            PathKind::Piecewise(pieces) => {
                let idx = match side {
                    Side::Right => pieces.partition_point(|(s, _)| *s <= t),
                    Side::Left => pieces.partition_point(|(s, _)| *s < t),
                };
                pieces[idx.saturating_sub(1)].1.clone()
            }
            PathKind::Polynomial(coeffs) => {
                let mut acc = coeffs[coeffs.len() - 1].clone();
                for c in coeffs.iter().rev().skip(1) {
                    acc *= t;
                    acc += c;
                }
                acc
            }
        }
    }

    /// Value at `t`, rejecting times outside `[0, horizon]`.
    pub fn eval_on(&self, t: f64, horizon: f64) -> Result<Mat> {
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::TimeOutOfRange { t, horizon });
        }
        Ok(self.value(t))
    }

    /// Adds a constant matrix at every time.
    pub fn add_constant(&self, m: &Mat) -> Self {
        let kind = match &self.kind {
            PathKind::Constant(c) => PathKind::Constant(c + m),
            PathKind::Piecewise(p) => PathKind::Piecewise(p.iter().map(|(s, c)| (*s, c + m)).collect()),
            PathKind::Polynomial(c) => {
                let mut c = c.clone();
                c[0] += m;
                PathKind::Polynomial(c)
            }
        };
        Self { kind, ..*self }
    }

    /// Replaces every stored matrix by `f(matrix)`; evaluation commutes with
    /// `f` whenever `f` is linear.
    pub fn map_linear(&self, f: impl Fn(&Mat) -> Mat) -> Self {
        let kind = match &self.kind {
            PathKind::Constant(c) => PathKind::Constant(f(c)),
            PathKind::Piecewise(p) => PathKind::Piecewise(p.iter().map(|(s, c)| (*s, f(c))).collect()),
            PathKind::Polynomial(c) => PathKind::Polynomial(c.iter().map(f).collect()),
        };
        let (rows, cols) = match &kind {
            PathKind::Constant(c) => c.shape(),
            PathKind::Piecewise(p) => p[0].1.shape(),
            PathKind::Polynomial(c) => c[0].shape(),
        };
        Self { kind, rows, cols }
    }

    pub fn transpose(&self) -> Self {
        self.map_linear(|m| m.transpose())
    }

    /// Structural problems: inconsistent shapes, unordered or out-of-range
    /// breakpoints, non-finite entries.
    pub fn issues(&self, horizon: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.matrices().any(|m| m.shape() != (self.rows, self.cols)) {
            out.push(format!("matrices do not share the declared {}x{} shape", self.rows, self.cols));
        }
        if self.matrices().any(|m| m.iter().any(|v| !v.is_finite())) {
            out.push("non-finite entry".to_string());
        }
        if let PathKind::Piecewise(p) = &self.kind {
            if p[0].0 != 0.0 {
                out.push(format!("first breakpoint is {} but must be 0", p[0].0));
            }
            if p.windows(2).any(|w| w[1].0 <= w[0].0) {
                out.push("breakpoints are not strictly increasing".to_string());
            }
            if p.iter().any(|(s, _)| !(0.0..=horizon).contains(s)) {
                out.push(format!("breakpoint outside [0, {horizon}]"));
            }
        }
        out
    }

    /// Largest `|M - Mᵀ|` entry over the stored matrices; for all three kinds
    /// this bounds the asymmetry of every value of the path.
    pub fn max_asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        self.matrices().map(crate::linalg::asymmetry).fold(0.0, f64::max)
    }

    pub fn symmetrized(&self) -> Self {
        if self.rows != self.cols {
            return self.clone();
        }
        self.map_linear(crate::linalg::symmetrize)
    }

    /// Breakpoints of a piecewise path (empty for other kinds).
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PathKind::Piecewise(p) => p.iter().map(|(s, _)| *s).collect(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    #[test]
    fn constant_path() {
        let p = CoefficientPath::constant(s(2.0));
        assert_eq!(p.eval_on(0.7, 1.0).unwrap(), s(2.0));
    }

    #[test]
    fn polynomial_path() {
        let p = CoefficientPath::polynomial(vec![s(0.0), s(1.0)]).unwrap();
        assert_eq!(p.eval_on(0.5, 1.0).unwrap(), s(0.5));
        let sq = CoefficientPath::polynomial(vec![s(0.0), s(0.0), s(1.0)]).unwrap();
        assert_eq!(sq.value(0.5), s(0.25));
    }

    #[test]
    fn piecewise_is_right_continuous() {
        let i = Mat::identity(2, 2);
        let p = CoefficientPath::piecewise(vec![(0.0, i.clone()), (0.5, &i * 2.0)]).unwrap();
        assert_eq!(p.eval_on(0.5, 1.0).unwrap(), &i * 2.0);
        assert_eq!(p.value_side(0.5, Side::Left), i);
        assert_eq!(p.value(0.49), i);
        assert_eq!(p.value(1.0), &i * 2.0);
    }

    #[test]
    fn out_of_range_time_is_rejected() {
        let p = CoefficientPath::scalar(1.0);
        assert!(matches!(p.eval_on(1.5, 1.0), Err(Error::TimeOutOfRange { .. })));
        assert!(p.eval_on(-0.1, 1.0).is_err());
    }

    #[test]
    fn breakpoint_issues() {
        let p = CoefficientPath::piecewise(vec![(0.0, s(1.0)), (0.6, s(2.0)), (0.4, s(3.0))]).unwrap();
        assert!(p.issues(1.0).iter().any(|m| m.contains("strictly increasing")));
        let q = CoefficientPath::piecewise(vec![(0.0, s(1.0)), (2.0, s(2.0))]).unwrap();
        assert!(q.issues(1.0).iter().any(|m| m.contains("outside")));
    }
}
