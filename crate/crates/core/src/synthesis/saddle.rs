use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::model::{CoefficientPath, GameSpec, Player, TimeGrid};

use super::law::{embed_player_path, ControlLaw, OffsetPath};
use super::moments::{EngineCopy, MomentPlan, Observable};

/// A deterministic perturbation direction for one player (`mᵢ × 1` path).
#[derive(Debug, Clone)]
pub struct Direction {
    pub player: Player,
    pub label: String,
    pub path: CoefficientPath,
}

pub const DEFAULT_LAMBDAS: [f64; 2] = [1.0, 0.1];

/// Unit-L² directions for each control coordinate of each player: the four
/// quarter-interval indicators, the constant, and the first Legendre
/// polynomial on `[0, T]`.
pub fn default_directions(spec: &GameSpec) -> Vec<Direction> {
    let t = spec.horizon;
    let mut out = Vec::new();
    for player in Player::BOTH {
        let dim = spec.player_dim(player);
        for i in 0..dim {
            let unit = |v: f64| {
                let mut m = Mat::zeros(dim, 1);
                m[(i, 0)] = v;
                m
            };
            let bump_height = (4.0 / t).sqrt();
            for q in 0..4 {
                let mut pieces = vec![(0.0, unit(if q == 0 { bump_height } else { 0.0 }))];
                for r in 1..4 {
                    pieces.push((r as f64 * t / 4.0, unit(if r == q { bump_height } else { 0.0 })));
                }
                out.push(Direction {
                    player,
                    label: format!("u{}[{i}] quarter {}", player.index() + 1, q + 1),
                    path: CoefficientPath::piecewise(pieces).expect("ordered breakpoints"),
                });
            }
            let c = 1.0 / t.sqrt();
            out.push(Direction {
                player,
                label: format!("u{}[{i}] constant", player.index() + 1),
                path: CoefficientPath::constant(unit(c)),
            });
            let s3 = 3.0_f64.sqrt() * c;
            out.push(Direction {
                player,
                label: format!("u{}[{i}] linear", player.index() + 1),
                path: CoefficientPath::polynomial(vec![unit(-s3), unit(2.0 * s3 / t)]).expect("two coefficients"),
            });
        }
    }
    out
}

/// `J(x; u* + λv) = J(x; u*) + 2λ·linear + λ²·quadratic` for one direction
/// and one magnitude `λ`.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionEntry {
    pub player: Player,
    pub direction: String,
    pub lambda: f64,
    pub linear: f64,
    pub quadratic: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaddleReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub tol: f64,
    pub entries: Vec<ExpansionEntry>,
    pub max_abs_linear: f64,
    pub passed: bool,
    /// What the verdict covers.
    pub scope: &'static str,
}

pub const SADDLE_SCOPE: &str =
    "unilateral deviations by deterministic offsets only; the candidate is replayed as an open-loop process";

/// Checks the saddle inequalities around the control process generated by
/// `candidate` from `x`.
///
/// The candidate's control process `u*` is held fixed (replayed open loop)
/// while one player adds `λv`. From `J(±λ)` and `J(0)`, the linear and
/// quadratic coefficients of the exact quadratic expansion are recovered;
/// the check passes iff every `|linear| ≤ tol` and every quadratic has the
/// player's sign (`≥ −tol` for the minimizer, `≤ tol` for the maximizer).
pub fn verify_saddle(
    spec: &GameSpec,
    candidate: &ControlLaw,
    x: &Vector,
    grid: &TimeGrid,
    directions: &[Direction],
    lambdas: &[f64],
    tol: f64,
) -> Result<SaddleReport> {
    if lambdas.iter().any(|l| *l == 0.0 || !l.is_finite()) {
        return Err(Error::InvalidArgument("perturbation magnitudes must be finite and non-zero".into()));
    }
    let plan = MomentPlan::new(spec, grid, &[candidate])?;
    let base = EngineCopy { gains: 0, source: 0, offset: &candidate.offset };
    let j0 = plan.run(&[base], x, &[Observable::Cost(0)], false)?.values[0];

    let mut jobs = Vec::new();
    for d in directions {
        let v = embed_player_path(spec, d.player, &d.path)?;
        for &lam in lambdas {
            let lam = lam.abs();
            let plus = candidate.offset.clone().plus(lam, v.clone())?;
            let minus = candidate.offset.clone().plus(-lam, v.clone())?;
            jobs.push((d, lam, plus, minus));
        }
    }
    let replay = |offset: &OffsetPath| -> Result<f64> {
        let copies = [base, EngineCopy { gains: 0, source: 0, offset }];
        Ok(plan.run(&copies, x, &[Observable::Cost(1)], false)?.values[0])
    };
    let entries = jobs
        .par_iter()
        .map(|(d, lam, plus, minus)| {
            let jp = replay(plus)?;
            let jm = replay(minus)?;
            let linear = (jp - jm) / (4.0 * lam);
            let quadratic = (jp + jm - 2.0 * j0) / (2.0 * lam * lam);
            let passed = linear.abs() <= tol && d.player.sign() * quadratic >= -tol;
            Ok(ExpansionEntry { player: d.player, direction: d.label.clone(), lambda: *lam, linear, quadratic, passed })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SaddleReport {
        x: x.iter().copied().collect(),
        value: j0,
        tol,
        max_abs_linear: entries.iter().map(|e| e.linear.abs()).fold(0.0, f64::max),
        passed: entries.iter().all(|e| e.passed),
        entries,
        scope: SADDLE_SCOPE,
    })
}
