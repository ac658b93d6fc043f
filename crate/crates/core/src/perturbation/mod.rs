//! The ε-perturbation procedure: solve the two-sided perturbed games along a
//! geometric schedule, measure the resulting saddle controls exactly, and
//! decide whether the family stays bounded (open-loop solvable) or blows up.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::model::{embed_perturbation, GameSpec, TimeGrid};
use crate::riccati::RiccatiOptions;
use crate::synthesis::{
    control_distance_sq, control_norm_sq, default_directions, evaluate_functional, synthesize, verify_saddle,
    ControlLaw, FeedbackLaw, SaddleReport, DEFAULT_LAMBDAS,
};

/// Growth exponents below this count as bounded.
pub const BOUNDED_EXPONENT: f64 = 0.1;
/// Growth exponents at or above this certify blow-up.
pub const DIVERGENT_EXPONENT: f64 = 0.9;
/// Number of trailing schedule points used in the exponent fit.
pub const FIT_POINTS: usize = 6;
/// Norms below this are treated as exactly zero.
const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsSchedule {
    pub eps0: f64,
    pub factor: f64,
    pub count: usize,
    pub values: Vec<f64>,
}

impl EpsSchedule {
    pub fn new(eps0: f64, factor: f64, count: usize) -> Result<Self> {
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps0 must be positive, got {eps0}")));
        }
        if !(factor > 0.0 && factor < 1.0) {
            return Err(Error::InvalidArgument(format!("eps factor must lie in (0, 1), got {factor}")));
        }
        if count == 0 {
            return Err(Error::InvalidArgument("schedule needs at least one point".into()));
        }
        let values: Vec<f64> = (0..count).map(|k| eps0 * factor.powi(k as i32)).collect();
        if values.iter().any(|v| v.is_nan() || *v <= 0.0) {
            return Err(Error::InvalidArgument("schedule underflows to zero".into()));
        }
        Ok(Self { eps0, factor, count, values })
    }
}

impl Default for EpsSchedule {
    fn default() -> Self {
        Self::new(0.5, 0.5, 14).expect("default schedule is valid")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsIterate {
    pub eps: f64,
    #[serde(skip)]
    pub feedback: Arc<FeedbackLaw>,
    /// `E∫|u_ε|²`.
    pub norm_sq: f64,
    /// `⟨Π_ε(0)x, x⟩`.
    pub value: f64,
}

impl EpsIterate {
    pub fn norm(&self) -> f64 {
        self.norm_sq.max(0.0).sqrt()
    }

    pub fn law(&self) -> ControlLaw {
        ControlLaw::feedback(self.feedback.clone())
    }
}

/// Saddle of the game perturbed by `ε‖u₁‖² − ε‖u₂‖²`, measured on the
/// original dynamics.
pub fn build_eps_iterate(spec: &GameSpec, eps: f64, grid: &TimeGrid, x: &Vector) -> Result<EpsIterate> {
    build_eps_iterate_with(spec, eps, grid, x, &RiccatiOptions::default())
}

pub fn build_eps_iterate_with(
    spec: &GameSpec,
    eps: f64,
    grid: &TimeGrid,
    x: &Vector,
    opts: &RiccatiOptions,
) -> Result<EpsIterate> {
    let wrap = |e: Error| Error::Iterate { eps, source: Box::new(e) };
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let perturbed = embed_perturbation(spec, eps).map_err(wrap)?;
    let feedback = synthesize(&perturbed, grid, opts).map_err(wrap)?;
    let norm_sq = control_norm_sq(spec, &ControlLaw::feedback(feedback.clone()), x, grid).map_err(wrap)?;
    let value = feedback.value_at(x);
    Ok(EpsIterate { eps, feedback, norm_sq, value })
}

/// `‖u_A − u_B‖` in `L²`, exact up to the integrator.
pub fn control_distance(spec: &GameSpec, a: &EpsIterate, b: &EpsIterate, x: &Vector, grid: &TimeGrid) -> Result<f64> {
    if a.feedback.grid != *grid || b.feedback.grid != *grid {
        return Err(Error::GridMismatch("iterates were built on a different grid".into()));
    }
    Ok(control_distance_sq(spec, &a.law(), &b.law(), x, grid)?.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Solvable,
    NotSolvable,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Solvable => "solvable",
            Verdict::NotSolvable => "not-solvable",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Least-squares fit `log‖u_ε‖ ≈ intercept + exponent·log(1/ε)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Schedule points that entered the fit.
    pub points: usize,
}

pub fn fit_growth_exponent(eps: &[f64], norms: &[f64]) -> ExponentFit {
    let start = eps.len().saturating_sub(FIT_POINTS);
    let pts: Vec<(f64, f64)> = eps[start..]
        .iter()
        .zip(&norms[start..])
        .filter(|(_, n)| **n > ZERO_NORM)
        .map(|(e, n)| (-e.ln(), n.ln()))
        .collect();
    if pts.len() < 2 {
        let intercept = pts.first().map_or(f64::NEG_INFINITY, |p| p.1);
        return ExponentFit { exponent: 0.0, intercept, points: pts.len() };
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let exponent = sxy / sxx;
    ExponentFit { exponent, intercept: my - exponent * mx, points: pts.len() }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsFamilyReport {
    pub x: Vec<f64>,
    pub tol: f64,
    pub schedule: EpsSchedule,
    pub iterates: Vec<EpsIterate>,
    /// `‖u_{ε_k} − u_{ε_{k+1}}‖`.
    pub distances: Vec<f64>,
    pub fit: ExponentFit,
    pub verdict: Verdict,
    /// Smallest-ε feedback, kept when the family is judged solvable.
    #[serde(skip)]
    pub limit: Option<ControlLaw>,
    pub limit_eps: Option<f64>,
    /// `J(x; limit)` on the unperturbed game.
    pub limit_value: Option<f64>,
    /// `|V_ε(x) − J(x; limit)|` along the schedule.
    pub value_gaps: Option<Vec<f64>>,
    pub saddle: Option<SaddleReport>,
}

impl EpsFamilyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `eps,norm,value` per schedule point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,norm,value\n");
        for it in &self.iterates {
            out.push_str(&format!("{},{},{}\n", it.eps, it.norm(), it.value));
        }
        out
    }
}

pub fn classify_family(
    spec: &GameSpec,
    schedule: &EpsSchedule,
    x: &Vector,
    grid: &TimeGrid,
    tol: f64,
) -> Result<EpsFamilyReport> {
    classify_family_with(spec, schedule, x, grid, tol, &RiccatiOptions::default())
}

pub fn classify_family_with(
    spec: &GameSpec,
    schedule: &EpsSchedule,
    x: &Vector,
    grid: &TimeGrid,
    tol: f64,
    opts: &RiccatiOptions,
) -> Result<EpsFamilyReport> {
    let schedule = EpsSchedule::new(schedule.eps0, schedule.factor, schedule.count)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let iterates = schedule
        .values
        .par_iter()
        .map(|&eps| build_eps_iterate_with(spec, eps, grid, x, opts))
        .collect::<Result<Vec<_>>>()?;
    let distances = iterates
        .par_windows(2)
        .map(|w| {
            control_distance(spec, &w[0], &w[1], x, grid)
                .map_err(|e| Error::Iterate { eps: w[1].eps, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = iterates.iter().map(EpsIterate::norm).collect();
    let fit = fit_growth_exponent(&schedule.values, &norms);
    let cauchy = distances.last().is_some_and(|d| *d <= tol);
    let verdict = if fit.exponent >= DIVERGENT_EXPONENT {
        Verdict::NotSolvable
    } else if cauchy && fit.exponent < BOUNDED_EXPONENT {
        Verdict::Solvable
    } else {
        Verdict::Inconclusive
    };

    let mut report = EpsFamilyReport {
        x: x.iter().copied().collect(),
        tol,
        schedule,
        iterates,
        distances,
        fit,
        verdict,
        limit: None,
        limit_eps: None,
        limit_value: None,
        value_gaps: None,
        saddle: None,
    };
    if verdict == Verdict::Solvable {
        let last = report.iterates.last().expect("schedule is non-empty");
        let limit = last.law();
        let limit_value = evaluate_functional(spec, &limit, x, grid)?.value;
        let saddle = verify_saddle(spec, &limit, x, grid, &default_directions(spec), &DEFAULT_LAMBDAS, tol)?;
        report.value_gaps = Some(report.iterates.iter().map(|it| (it.value - limit_value).abs()).collect());
        report.limit_eps = Some(last.eps);
        report.limit_value = Some(limit_value);
        report.saddle = Some(saddle);
        report.limit = Some(limit);
    }
    Ok(report)
}

#[cfg(test)]
mod tests;
