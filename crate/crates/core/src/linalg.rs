//! Small dense helpers shared by every solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry of `m - mᵀ`.
pub fn asymmetry(m: &Mat) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn is_square(m: &Mat) -> bool {
    m.nrows() == m.ncols()
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

pub fn max_eigenvalue(m: &Mat) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Eigenpair of the symmetric part with the smallest eigenvalue.
pub fn min_eigenpair(m: &Mat) -> (f64, Vector) {
    extreme_eigenpair(m, false)
}

/// Eigenpair of the symmetric part with the largest eigenvalue.
pub fn max_eigenpair(m: &Mat) -> (f64, Vector) {
    extreme_eigenpair(m, true)
}

fn extreme_eigenpair(m: &Mat, largest: bool) -> (f64, Vector) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        let better = if largest {
            eig.eigenvalues[i] > eig.eigenvalues[best]
        } else {
            eig.eigenvalues[i] < eig.eigenvalues[best]
        };
        if better {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors.column(best).into_owned())
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Eigen-based solver for symmetric, possibly indefinite, systems.
///
/// The condition estimate is `max|λ| / min|λ|`; factorizations above the
/// configured limit are rejected by [`SymmetricSolver::new`].
#[derive(Debug, Clone)]
pub struct SymmetricSolver {
    eigenvectors: Mat,
    inv_eigenvalues: Vector,
    pub condition: f64,
    pub eigenvalues: Vector,
}

impl SymmetricSolver {
    /// Returns `Err(condition)` when the matrix is singular or the condition
    /// estimate exceeds `max_condition`.
    pub fn new(m: &Mat, max_condition: f64) -> Result<Self, f64> {
        let eig = SymmetricEigen::new(symmetrize(m));
        let abs_max = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let abs_min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        let condition = if abs_min > 0.0 { abs_max / abs_min } else { f64::INFINITY };
        if !condition.is_finite() || condition > max_condition {
            return Err(condition);
        }
        Ok(Self {
            inv_eigenvalues: eig.eigenvalues.map(|v| 1.0 / v),
            eigenvectors: eig.eigenvectors,
            condition,
            eigenvalues: eig.eigenvalues,
        })
    }

    pub fn solve(&self, rhs: &Mat) -> Mat {
        let mut tmp = self.eigenvectors.transpose() * rhs;
        for (i, mut row) in tmp.row_iter_mut().enumerate() {
            row *= self.inv_eigenvalues[i];
        }
        &self.eigenvectors * tmp
    }

    pub fn inverse(&self) -> Mat {
        let n = self.eigenvectors.nrows();
        self.solve(&Mat::identity(n, n))
    }
}

/// Block-diagonal matrix `diag(a, b)`.
pub fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Horizontal concatenation `[a b]`.
pub fn hcat(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// Vertical concatenation `[a; b]`.
pub fn vcat(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

/// `tr(a b)` for symmetric `a`, `b` of equal shape, i.e. the Frobenius inner product.
pub fn frobenius_inner(a: &Mat, b: &Mat) -> f64 {
    a.component_mul(b).sum()
}

/// Sum with pairwise (cascade) reduction; the result depends only on the
/// order of `values`, not on how they were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}
