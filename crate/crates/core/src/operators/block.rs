use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, block_diag, hcat, max_eigenvalue, min_eigenvalue, spectral_norm, symmetrize, vcat, Mat};

/// Tolerance (relative to the operator scale) on the sign conditions of the
/// diagonal blocks.
const SIGN_TOL: f64 = 1e-10;

/// Symmetric block matrix `(M₁₁ M₁₂; M₁₂ᵀ M₂₂)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockOperator {
    #[serde(skip)]
    pub m11: Mat,
    #[serde(skip)]
    pub m12: Mat,
    #[serde(skip)]
    pub m22: Mat,
}

impl BlockOperator {
    /// Checks shapes and symmetry (within `1e-12` of the entry scale), then
    /// symmetrizes the diagonal blocks.
    pub fn new(m11: Mat, m12: Mat, m22: Mat) -> Result<Self> {
        if !m11.is_square() || !m22.is_square() || m12.shape() != (m11.nrows(), m22.nrows()) {
            return Err(Error::InvalidArgument("inconsistent block shapes".into()));
        }
        let scale = 1.0_f64.max(m11.amax()).max(m22.amax());
        if asymmetry(&m11) > 1e-12 * scale || asymmetry(&m22) > 1e-12 * scale {
            return Err(Error::InvalidArgument("diagonal blocks must be symmetric".into()));
        }
        Ok(Self { m11: symmetrize(&m11), m12, m22: symmetrize(&m22) })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m11.nrows(), self.m22.nrows())
    }

    pub fn m21(&self) -> Mat {
        self.m12.transpose()
    }

    pub fn full(&self) -> Mat {
        vcat(&hcat(&self.m11, &self.m12), &hcat(&self.m21(), &self.m22))
    }

    fn scale(&self) -> f64 {
        1.0_f64.max(self.full().amax())
    }

    /// `λ_min(M₁₁) ≥ 0` and `λ_max(M₂₂) ≤ 0` up to rounding.
    pub fn check_signs(&self) -> Result<()> {
        let tol = SIGN_TOL * self.scale();
        let lo = min_eigenvalue(&self.m11);
        let hi = max_eigenvalue(&self.m22);
        if lo < -tol || hi > tol {
            return Err(Error::Precondition(format!(
                "need M₁₁ ⪰ 0 and M₂₂ ⪯ 0, got λ_min(M₁₁) = {lo:.3e}, λ_max(M₂₂) = {hi:.3e}"
            )));
        }
        Ok(())
    }

    /// `M_ε = M + ε·diag(I, −I)`.
    pub fn perturbed(&self, eps: f64) -> Self {
        let (d1, d2) = self.dims();
        Self {
            m11: &self.m11 + Mat::identity(d1, d1) * eps,
            m12: self.m12.clone(),
            m22: &self.m22 - Mat::identity(d2, d2) * eps,
        }
    }
}

fn spd_inverse(m: &Mat, what: &str) -> Result<Mat> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Precondition(format!("{what} is not positive definite")))
}

/// `LᵀML − LᵀMK(KᵀMK + δI)⁻¹KᵀML` for symmetric `M ⪰ 0`.
pub fn lemma_psd_gap(m: &Mat, k: &Mat, l: &Mat, delta: f64) -> Result<Mat> {
    let n = m.nrows();
    if !m.is_square() || k.nrows() != n || l.nrows() != n {
        return Err(Error::InvalidArgument("M must be n×n, K n×m and L n×p".into()));
    }
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    let scale = 1.0_f64.max(m.amax());
    if asymmetry(m) > 1e-12 * scale || min_eigenvalue(m) < -1e-10 * scale {
        return Err(Error::Precondition("M must be symmetric positive semidefinite".into()));
    }
    let ml = m * l;
    let mk = m * k;
    let inner = k.transpose() * &mk + Mat::identity(k.ncols(), k.ncols()) * delta;
    let inv = spd_inverse(&symmetrize(&inner), "KᵀMK + δI")?;
    let kml = k.transpose() * &ml;
    Ok(symmetrize(&(l.transpose() * &ml - kml.transpose() * inv * kml)))
}

/// `M_ε⁻¹` by the Schur-complement block formula: with
/// `A = M₁₁ + εI` and `Φ = M₂₂ − εI − M₁₂ᵀA⁻¹M₁₂`,
/// `M_ε⁻¹ = (A⁻¹ + A⁻¹M₁₂Φ⁻¹M₁₂ᵀA⁻¹, −A⁻¹M₁₂Φ⁻¹; ·, Φ⁻¹)`.
pub fn perturbed_inverse(op: &BlockOperator, eps: f64) -> Result<BlockOperator> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    op.check_signs()?;
    let (d1, d2) = op.dims();
    let a_inv = spd_inverse(&(&op.m11 + Mat::identity(d1, d1) * eps), "M₁₁ + εI")?;
    let a_inv_b = &a_inv * &op.m12;
    let neg_phi = Mat::identity(d2, d2) * eps - &op.m22 + op.m12.transpose() * &a_inv_b;
    let phi_inv = -spd_inverse(&symmetrize(&neg_phi), "εI − M₂₂ + M₁₂ᵀ(M₁₁+εI)⁻¹M₁₂")?;
    let x12 = -(&a_inv_b * &phi_inv);
    let x11 = &a_inv - &x12 * a_inv_b.transpose();
    Ok(BlockOperator { m11: symmetrize(&x11), m12: x12, m22: symmetrize(&phi_inv) })
}

/// `‖M_ε⁻¹M‖₂`, at most one for every `ε > 0` when `M₁₁ ⪰ 0 ⪰ M₂₂`.
///
/// Evaluated as `‖I − εM_ε⁻¹J‖` with `J = diag(I, −I)`: multiplying the
/// inverse back against `M` loses about `‖M‖/ε` ulps, which is visible for
/// small `ε`.
pub fn contraction_norm(op: &BlockOperator, eps: f64) -> Result<f64> {
    let inv = perturbed_inverse(op, eps)?;
    let (d1, d2) = op.dims();
    let j = signature(d1, d2);
    Ok(spectral_norm(&(Mat::identity(d1 + d2, d1 + d2) - inv.full() * j * eps)))
}

/// `diag(I_{d₁}, −I_{d₂})`.
pub fn signature(d1: usize, d2: usize) -> Mat {
    block_diag(&Mat::identity(d1, d1), &(-Mat::identity(d2, d2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(m11: Mat, m12: Mat, m22: Mat) -> BlockOperator {
        BlockOperator::new(m11, m12, m22).unwrap()
    }

    #[test]
    fn zero_operator() {
        let z = op(Mat::zeros(2, 2), Mat::zeros(2, 3), Mat::zeros(3, 3));
        let inv = perturbed_inverse(&z, 2.0).unwrap();
        assert!((inv.full() - signature(2, 3) * 0.5).amax() < 1e-15);
        assert_eq!(contraction_norm(&z, 1.0).unwrap(), 0.0);
        assert_eq!(lemma_psd_gap(&Mat::zeros(2, 2), &Mat::identity(2, 3), &Mat::identity(2, 2), 1.0).unwrap(), Mat::zeros(2, 2));
    }

    #[test]
    fn decoupled_blocks() {
        let m11 = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let m22 = Mat::from_row_slice(1, 1, &[-3.0]);
        let o = op(m11.clone(), Mat::zeros(2, 1), m22.clone());
        let inv = perturbed_inverse(&o, 0.1).unwrap();
        let e11 = (m11 + Mat::identity(2, 2) * 0.1).try_inverse().unwrap();
        assert!((inv.m11 - e11).amax() < 1e-14);
        assert!((inv.m22[(0, 0)] + 1.0 / 3.1).abs() < 1e-15);
        assert_eq!(inv.m12, Mat::zeros(2, 1));
    }

    #[test]
    fn identity_blocks_contract_by_half() {
        let o = op(Mat::identity(2, 2), Mat::zeros(2, 2), -Mat::identity(2, 2));
        assert!((contraction_norm(&o, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gap_without_k_is_lml() {
        let m = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let l = Mat::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let gap = lemma_psd_gap(&m, &Mat::zeros(2, 1), &l, 0.5).unwrap();
        assert!((gap - l.transpose() * &m * &l).amax() < 1e-14);
    }

    #[test]
    fn preconditions_are_enforced() {
        let bad = op(-Mat::identity(1, 1), Mat::zeros(1, 1), -Mat::identity(1, 1));
        assert!(matches!(perturbed_inverse(&bad, 1.0), Err(Error::Precondition(_))));
        let good = op(Mat::identity(1, 1), Mat::zeros(1, 1), -Mat::identity(1, 1));
        assert!(perturbed_inverse(&good, 0.0).is_err());
        assert!(lemma_psd_gap(&-Mat::identity(2, 2), &Mat::zeros(2, 1), &Mat::identity(2, 2), 1.0).is_err());
        assert!(BlockOperator::new(Mat::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]), Mat::zeros(2, 1), Mat::zeros(1, 1)).is_err());
    }
}
