use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, Mat};
use crate::model::GameSpec;

use super::equations::{block_margins, MeanData};
use super::solution::RiccatiSolution;

/// Nodal data of the deterministic game solved by the mean equation:
/// `Υ = Q+Q̄+(C+C̄)ᵀP(C+C̄)`, `Γᵢ = (Dᵢ+D̄ᵢ)ᵀP(C+C̄)+Sᵢ+S̄ᵢ` and
/// `Σ̄ = R+R̄+(D+D̄)ᵀP(D+D̄)`.
#[derive(Debug, Clone)]
pub struct DGWeights {
    pub times: Vec<f64>,
    pub upsilon: Vec<Mat>,
    pub gamma1: Vec<Mat>,
    pub gamma2: Vec<Mat>,
    pub sigma_bar: Vec<Mat>,
}

pub fn assemble_dg_weights(spec: &GameSpec, p: &RiccatiSolution) -> DGWeights {
    let times = p.grid.nodes();
    let mut out = DGWeights {
        times: times.clone(),
        upsilon: Vec::with_capacity(times.len()),
        gamma1: Vec::with_capacity(times.len()),
        gamma2: Vec::with_capacity(times.len()),
        sigma_bar: Vec::with_capacity(times.len()),
    };
    for (k, &t) in times.iter().enumerate() {
        let md = MeanData::new(&spec.snapshot(t), &p.values[k]);
        out.gamma1.push(md.gamma.rows(0, spec.m1).into_owned());
        out.gamma2.push(md.gamma.rows(spec.m1, spec.m2).into_owned());
        out.upsilon.push(md.upsilon);
        out.sigma_bar.push(md.sigma_bar);
    }
    out
}

/// Per-node signed margins of the four weights that must stay definite:
/// `R₁₁+D₁ᵀPD₁`, `−(R₂₂+D₂ᵀPD₂)` and their mean-field counterparts built
/// from `R+R̄` and `D+D̄`.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub delta: f64,
    pub times: Vec<f64>,
    pub player_1: Vec<f64>,
    pub player_2: Vec<f64>,
    pub player_1_bar: Vec<f64>,
    pub player_2_bar: Vec<f64>,
    pub passed: bool,
}

impl RegularityReport {
    /// Smallest value of each of the four margins.
    pub fn minima(&self) -> [f64; 4] {
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        [min(&self.player_1), min(&self.player_2), min(&self.player_1_bar), min(&self.player_2_bar)]
    }
}

pub fn check_strong_regularity(p: &RiccatiSolution, spec: &GameSpec, delta: f64) -> RegularityReport {
    let times = p.grid.nodes();
    let mut r = RegularityReport {
        delta,
        times: times.clone(),
        player_1: vec![],
        player_2: vec![],
        player_1_bar: vec![],
        player_2_bar: vec![],
        passed: false,
    };
    for (k, &t) in times.iter().enumerate() {
        let sn = spec.snapshot(t);
        let v = &p.values[k];
        let (a, b) = block_margins(spec, &(&sn.r + sn.d.transpose() * v * &sn.d));
        let (abar, bbar) = block_margins(spec, &MeanData::new(&sn, v).sigma_bar);
        r.player_1.push(a);
        r.player_2.push(b);
        r.player_1_bar.push(abar);
        r.player_2_bar.push(bbar);
    }
    r.passed = r.minima().iter().all(|&m| m >= delta);
    r
}

/// Per-node `λ_min(P − P₁)` and `λ_min(P₂ − P)`.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub tol: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub min_lower: f64,
    pub min_upper: f64,
    pub passed: bool,
}

pub const COMPARISON_TOL: f64 = 1e-8;

pub fn check_comparison(
    p: &RiccatiSolution,
    p1: &RiccatiSolution,
    p2: &RiccatiSolution,
    tol: f64,
) -> Result<ComparisonReport> {
    if !p.same_grid(p1) || !p.same_grid(p2) {
        return Err(Error::GridMismatch("comparison needs all three solutions on one grid".into()));
    }
    let lower: Vec<f64> = p.values.iter().zip(&p1.values).map(|(a, b)| min_eigenvalue(&(a - b))).collect();
    let upper: Vec<f64> = p2.values.iter().zip(&p.values).map(|(a, b)| min_eigenvalue(&(a - b))).collect();
    let min_lower = lower.iter().copied().fold(f64::INFINITY, f64::min);
    let min_upper = upper.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ComparisonReport { tol, passed: min_lower >= -tol && min_upper >= -tol, lower, upper, min_lower, min_upper })
}
