//! Right-hand sides of the three Riccati families.

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, Mat, SymmetricSolver};
use crate::model::{GameSpec, Player, Snapshot};

/// Which equation a solution belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationKind {
    /// The game equation with both players' channels.
    Game,
    /// The single-player control equation.
    Control(Player),
    /// The mean equation driven by a game solution.
    Mean,
}

/// Control channel seen by one equation: `(B, D, S, R)` restricted to one
/// player, or the full stacked channel.
pub(crate) struct Channel {
    pub b: Mat,
    pub d: Mat,
    pub s: Mat,
    pub r: Mat,
}

impl Channel {
    pub fn of(spec: &GameSpec, sn: &Snapshot, player: Option<Player>) -> Self {
        match player {
            None => Self { b: sn.b.clone(), d: sn.d.clone(), s: sn.s.clone(), r: sn.r.clone() },
            Some(p) => {
                let off = spec.player_offset(p);
                let dim = spec.player_dim(p);
                Self {
                    b: sn.b.columns(off, dim).into_owned(),
                    d: sn.d.columns(off, dim).into_owned(),
                    s: sn.s.rows(off, dim).into_owned(),
                    r: sn.r.view((off, off), (dim, dim)).into_owned(),
                }
            }
        }
    }
}

pub(crate) struct Evaluated {
    /// `dP/dt`.
    pub deriv: Mat,
    /// Stiffness estimate of the linearized equation.
    pub rate: f64,
}

fn breakdown(t: f64, what: &'static str) -> impl Fn(f64) -> Error {
    move |condition| Error::RegularityBreakdown { t, what, condition }
}

/// `Ṗ = −[PA + AᵀP + CᵀPC + Q + (PB + CᵀPD + Sᵀ)Θ]` with
/// `Θ = −(R + DᵀPD)⁻¹(BᵀP + DᵀPC + S)`.
pub(crate) fn game_rhs(
    t: f64,
    sn: &Snapshot,
    ch: &Channel,
    p: &Mat,
    max_condition: f64,
    what: &'static str,
) -> Result<Evaluated> {
    let pd = p * &ch.d;
    let weight = &ch.r + ch.d.transpose() * &pd;
    let coupling = ch.b.transpose() * p + pd.transpose() * &sn.c + &ch.s;
    let solver = SymmetricSolver::new(&weight, max_condition).map_err(breakdown(t, what))?;
    let gain = -solver.solve(&coupling);
    let pa = p * &sn.a;
    let f = &pa + pa.transpose() + sn.c.transpose() * p * &sn.c + &sn.q + coupling.transpose() * &gain;
    let closed_drift = &sn.a + &ch.b * &gain;
    let closed_diff = &sn.c + &ch.d * &gain;
    let rate = 2.0 * closed_drift.norm() + closed_diff.norm_squared();
    Ok(Evaluated { deriv: -f, rate })
}

/// Data of the deterministic game driving the mean equation, built from the
/// game solution `P` at one instant.
pub(crate) struct MeanData {
    pub a: Mat,
    pub b: Mat,
    pub upsilon: Mat,
    pub gamma: Mat,
    pub sigma_bar: Mat,
}

impl MeanData {
    pub fn new(sn: &Snapshot, p: &Mat) -> Self {
        let c = &sn.c + &sn.c_bar;
        let d = &sn.d + &sn.d_bar;
        let pc = p * &c;
        Self {
            a: &sn.a + &sn.a_bar,
            b: &sn.b + &sn.b_bar,
            upsilon: &sn.q + &sn.q_bar + c.transpose() * &pc,
            gamma: d.transpose() * &pc + &sn.s + &sn.s_bar,
            sigma_bar: &sn.r + &sn.r_bar + d.transpose() * p * &d,
        }
    }
}

/// `Π̇ = −[Π(A+Ā) + (A+Ā)ᵀΠ + Υ + (Π(B+B̄) + Γᵀ)Θ̄]` with
/// `Θ̄ = −Σ̄⁻¹((B+B̄)ᵀΠ + Γ)`.
pub(crate) fn mean_rhs(t: f64, md: &MeanData, pi: &Mat, max_condition: f64) -> Result<Evaluated> {
    let coupling = md.b.transpose() * pi + &md.gamma;
    let solver = SymmetricSolver::new(&md.sigma_bar, max_condition).map_err(breakdown(t, "R + R̄ + (D+D̄)ᵀP(D+D̄)"))?;
    let gain = -solver.solve(&coupling);
    let pa = pi * &md.a;
    let f = &pa + pa.transpose() + &md.upsilon + coupling.transpose() * &gain;
    let rate = 2.0 * (&md.a + &md.b * &gain).norm();
    Ok(Evaluated { deriv: -f, rate })
}

/// Signed block margins `(λ_min(W₁₁), λ_min(−W₂₂))` of a stacked weight.
pub(crate) fn block_margins(spec: &GameSpec, w: &Mat) -> (f64, f64) {
    let (m1, m2) = (spec.m1, spec.m2);
    let w11 = w.view((0, 0), (m1, m1)).into_owned();
    let w22 = w.view((m1, m1), (m2, m2)).into_owned();
    (min_eigenvalue(&w11), min_eigenvalue(&(-w22)))
}
