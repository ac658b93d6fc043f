use crate::linalg::Mat;

/// One cubic Hermite piece on `[t0, t1]`: end values and end derivatives.
#[derive(Debug, Clone)]
struct Piece {
    t0: f64,
    t1: f64,
    v0: Mat,
    v1: Mat,
    d0: Mat,
    d1: Mat,
}

/// Piecewise cubic Hermite interpolant of a matrix path on a (non-uniform)
/// mesh covering `[0, T]`.
///
/// The solvers record every RK4 substep here, so evaluating between grid
/// nodes is accurate to the order of the integrator.
#[derive(Debug, Clone, Default)]
pub struct DensePath {
    pieces: Vec<Piece>,
}

impl DensePath {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self { pieces: Vec::with_capacity(n) }
    }

    pub(crate) fn push(&mut self, t0: f64, t1: f64, v0: Mat, v1: Mat, d0: Mat, d1: Mat) {
        self.pieces.push(Piece { t0, t1, v0, v1, d0, d1 });
    }

    /// Sorts pieces by start time (backward solvers push them in reverse).
    pub(crate) fn finish(&mut self) {
        self.pieces.sort_by(|a, b| a.t0.total_cmp(&b.t0));
    }

    /// Piecewise-linear interpolant through `(times[k], values[k])`.
    pub fn linear(times: &[f64], values: &[Mat]) -> Self {
        let mut out = Self::with_capacity(times.len().saturating_sub(1));
        for k in 0..times.len().saturating_sub(1) {
            let slope = (&values[k + 1] - &values[k]) / (times[k + 1] - times[k]);
            out.push(times[k], times[k + 1], values[k].clone(), values[k + 1].clone(), slope.clone(), slope);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Mesh points of the interpolant (piece start times plus the final end).
    pub fn mesh(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.pieces.iter().map(|p| p.t0).collect();
        if let Some(last) = self.pieces.last() {
            out.push(last.t1);
        }
        out
    }

    /// Value at `t`, clamped to the covered range.
    pub fn eval(&self, t: f64) -> Mat {
        let idx = self.pieces.partition_point(|p| p.t1 <= t).min(self.pieces.len() - 1);
        let p = &self.pieces[idx];
        let h = p.t1 - p.t0;
        let s = ((t - p.t0) / h).clamp(0.0, 1.0);
        if s == 0.0 {
            return p.v0.clone();
        }
        if s == 1.0 {
            return p.v1.clone();
        }
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        &p.v0 * h00 + &p.d0 * (h10 * h) + &p.v1 * h01 + &p.d1 * (h11 * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |t: f64| t * t * t - 2.0 * t + 1.0;
        let df = |t: f64| 3.0 * t * t - 2.0;
        let mut d = DensePath::default();
        for (a, b) in [(0.0, 0.4), (0.4, 1.0)] {
            let m = |v: f64| Mat::from_element(1, 1, v);
            d.push(a, b, m(f(a)), m(f(b)), m(df(a)), m(df(b)));
        }
        for t in [0.0, 0.1, 0.4, 0.77, 1.0] {
            assert!((d.eval(t)[(0, 0)] - f(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_interpolant() {
        let m = |v: f64| Mat::from_element(1, 1, v);
        let d = DensePath::linear(&[0.0, 1.0, 2.0], &[m(0.0), m(2.0), m(0.0)]);
        assert_eq!(d.eval(0.5)[(0, 0)], 1.0);
        assert_eq!(d.eval(1.5)[(0, 0)], 1.0);
        assert_eq!(d.mesh(), vec![0.0, 1.0, 2.0]);
    }
}
