use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{Mat, SymmetricSolver};
use crate::model::{GameSpec, Side, TimeGrid};
use crate::riccati::{Channel, MeanData, RiccatiOptions, RiccatiSolution};

/// Saddle feedback `u = Θ(X − E[X]) + Θ̄E[X]` built from the game solution
/// `P` and the mean solution `Π`, with the weights it inverts:
/// `Σ = R + DᵀPD` and `Σ̄ = R + R̄ + (D+D̄)ᵀP(D+D̄)`.
///
/// The node fields are plain data; [`FeedbackLaw::gains_at`] re-evaluates
/// the gains from the Riccati interpolants at arbitrary times.
#[derive(Debug, Clone)]
pub struct FeedbackLaw {
    pub grid: TimeGrid,
    pub sigma: Vec<Mat>,
    pub sigma_bar: Vec<Mat>,
    pub theta: Vec<Mat>,
    pub theta_bar: Vec<Mat>,
    spec: GameSpec,
    p: RiccatiSolution,
    pi: RiccatiSolution,
    max_condition: f64,
}

struct Pointwise {
    sigma: Mat,
    sigma_bar: Mat,
    theta: Mat,
    theta_bar: Mat,
}

fn pointwise(spec: &GameSpec, t: f64, side: Side, p: &Mat, pi: &Mat, max_condition: f64) -> Result<Pointwise> {
    let sn = spec.snapshot_side(t, side);
    let ch = Channel::of(spec, &sn, None);
    let pd = p * &ch.d;
    let sigma = &ch.r + ch.d.transpose() * &pd;
    let coupling = ch.b.transpose() * p + pd.transpose() * &sn.c + &ch.s;
    let theta = -SymmetricSolver::new(&sigma, max_condition)
        .map_err(|condition| Error::RegularityBreakdown { t, what: "R + DᵀPD", condition })?
        .solve(&coupling);
    let md = MeanData::new(&sn, p);
    let coupling_bar = md.b.transpose() * pi + &md.gamma;
    let theta_bar = -SymmetricSolver::new(&md.sigma_bar, max_condition)
        .map_err(|condition| Error::RegularityBreakdown { t, what: "R + R̄ + (D+D̄)ᵀP(D+D̄)", condition })?
        .solve(&coupling_bar);
    Ok(Pointwise { sigma, sigma_bar: md.sigma_bar, theta, theta_bar })
}

pub fn build_feedback(
    spec: &GameSpec,
    p: &RiccatiSolution,
    pi: &RiccatiSolution,
    opts: &RiccatiOptions,
) -> Result<FeedbackLaw> {
    if !p.same_grid(pi) {
        return Err(Error::GridMismatch("P and Π live on different grids".into()));
    }
    let grid = p.grid;
    let mut law = FeedbackLaw {
        sigma: Vec::with_capacity(grid.len()),
        sigma_bar: Vec::with_capacity(grid.len()),
        theta: Vec::with_capacity(grid.len()),
        theta_bar: Vec::with_capacity(grid.len()),
        grid,
        spec: spec.clone(),
        p: p.clone(),
        pi: pi.clone(),
        max_condition: opts.max_condition,
    };
    for k in 0..law.grid.len() {
        let pw = pointwise(spec, law.grid.node(k), Side::Right, &p.values[k], &pi.values[k], opts.max_condition)?;
        law.sigma.push(pw.sigma);
        law.sigma_bar.push(pw.sigma_bar);
        law.theta.push(pw.theta);
        law.theta_bar.push(pw.theta_bar);
    }
    Ok(law)
}

impl FeedbackLaw {
    pub fn state_dim(&self) -> usize {
        self.spec.n
    }

    pub fn control_dim(&self) -> usize {
        self.spec.control_dim()
    }

    /// The game the law was synthesized for.
    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn p(&self) -> &RiccatiSolution {
        &self.p
    }

    pub fn pi(&self) -> &RiccatiSolution {
        &self.pi
    }

    pub(crate) fn substeps(&self, k: usize) -> usize {
        self.p.substeps[k].max(self.pi.substeps[k])
    }

    /// `(Θ(t), Θ̄(t))` from the interpolated Riccati solutions.
    pub fn gains_at(&self, t: f64, side: Side) -> Result<(Mat, Mat)> {
        let pw = pointwise(&self.spec, t, side, &self.p.value_at(t), &self.pi.value_at(t), self.max_condition)?;
        Ok((pw.theta, pw.theta_bar))
    }

    /// `V(x) = ⟨Π(0)x, x⟩`.
    pub fn value_at(&self, x: &crate::linalg::Vector) -> f64 {
        x.dot(&(self.pi.initial() * x))
    }

    /// One row per node: `t`, then `Θ` and `Θ̄` entries row-major.
    pub fn to_csv(&self) -> String {
        let (m, n) = (self.control_dim(), self.state_dim());
        let mut out = String::from("t");
        for name in ["Theta", "ThetaBar"] {
            for i in 0..m {
                for j in 0..n {
                    let _ = write!(out, ",{name}_{i}_{j}");
                }
            }
        }
        out.push('\n');
        for k in 0..self.grid.len() {
            let _ = write!(out, "{}", self.grid.node(k));
            for g in [&self.theta[k], &self.theta_bar[k]] {
                for i in 0..m {
                    for j in 0..n {
                        let _ = write!(out, ",{}", g[(i, j)]);
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Sup over nodes of the Frobenius norms of
/// `BᵀP + DᵀPC + S + ΣΘ` and `(B+B̄)ᵀΠ + (D+D̄)ᵀP(C+C̄) + S + S̄ + Σ̄Θ̄`,
/// using the law's stored gains and weights rebuilt from `p`.
///
/// These identities are the first-order optimality system of the game
/// written for the feedback representation of the saddle point, with the
/// adjoint processes `Y = P(X − E[X]) + ΠE[X]` and `Z = P(C+DΘ)(X−E[X]) + …`
/// eliminated algebraically.
pub fn stationarity_residual(spec: &GameSpec, law: &FeedbackLaw, p: &RiccatiSolution, pi: &RiccatiSolution) -> f64 {
    gain_residual(spec, &law.theta, &law.theta_bar, p, pi)
}

/// The same identities for arbitrary nodal gains on the grid of `p`
/// (for instance, gains read back from a file).
pub fn gain_residual(spec: &GameSpec, theta: &[Mat], theta_bar: &[Mat], p: &RiccatiSolution, pi: &RiccatiSolution) -> f64 {
    let mut worst = 0.0_f64;
    for k in 0..p.grid.len() {
        let sn = spec.snapshot(p.grid.node(k));
        let pk = &p.values[k];
        let pd = pk * &sn.d;
        let sigma = &sn.r + sn.d.transpose() * &pd;
        let r1 = sn.b.transpose() * pk + pd.transpose() * &sn.c + &sn.s + sigma * &theta[k];
        let md = MeanData::new(&sn, pk);
        let r2 = md.b.transpose() * &pi.values[k] + &md.gamma + &md.sigma_bar * &theta_bar[k];
        worst = worst.max(r1.norm()).max(r2.norm());
    }
    worst
}
