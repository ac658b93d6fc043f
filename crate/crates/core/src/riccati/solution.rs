use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{GameSpec, Player, Side, TimeGrid};

use super::dense::DensePath;
use super::equations::{block_margins, game_rhs, mean_rhs, Channel, EquationKind, MeanData};
use super::integrate::sweep_backward;

/// Solver settings shared by the three Riccati families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiOptions {
    /// Strong-regularity threshold on the signed weight margins.
    pub delta: f64,
    /// Weights with a larger condition estimate count as singular.
    pub max_condition: f64,
    /// Substep rule: `h_sub · rate ≤ kappa`, with `rate` the local stiffness.
    pub kappa: f64,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        Self { delta: 1e-8, max_condition: 1e12, kappa: 0.05 }
    }
}

impl RiccatiOptions {
    pub fn with_delta(delta: f64) -> Self {
        Self { delta, ..Self::default() }
    }
}

/// A symmetric matrix path on a time grid, with its diagnostics.
///
/// `margin_1`/`margin_2` hold per-node signed eigenvalue margins of the
/// inverted weight: `λ_min(W₁₁)` and `λ_min(−W₂₂)` for the game and mean
/// equations, and the single player's own margin (in both fields) for a
/// control equation. They are empty for paths built from raw values.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub kind: EquationKind,
    pub grid: TimeGrid,
    pub values: Vec<Mat>,
    pub margin_1: Vec<f64>,
    pub margin_2: Vec<f64>,
    pub residual_norm: f64,
    pub strongly_regular: bool,
    pub delta: f64,
    /// Largest asymmetry removed by symmetrization after a step.
    pub max_asymmetry: f64,
    /// RK4 substeps used on each grid interval.
    pub substeps: Vec<usize>,
    dense: DensePath,
}

impl RiccatiSolution {
    /// Wraps nodal values (linear interpolation in between). Margins are
    /// left empty and the residual is not computed.
    pub fn from_values(kind: EquationKind, grid: TimeGrid, values: Vec<Mat>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        let dense = DensePath::linear(&grid.nodes(), &values);
        Ok(Self {
            kind,
            substeps: vec![1; grid.steps()],
            grid,
            values,
            margin_1: Vec::new(),
            margin_2: Vec::new(),
            residual_norm: f64::NAN,
            strongly_regular: false,
            delta: 0.0,
            max_asymmetry: 0.0,
            dense,
        })
    }

    pub fn dim(&self) -> usize {
        self.values[0].nrows()
    }

    pub fn initial(&self) -> &Mat {
        &self.values[0]
    }

    pub fn terminal(&self) -> &Mat {
        &self.values[self.values.len() - 1]
    }

    /// Value at any `t ∈ [0, T]` from the substep-level Hermite interpolant.
    pub fn value_at(&self, t: f64) -> Mat {
        self.dense.eval(t)
    }

    pub fn min_margin_1(&self) -> f64 {
        self.margin_1.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_margin_2(&self) -> f64 {
        self.margin_2.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn same_grid(&self, other: &RiccatiSolution) -> bool {
        self.grid == other.grid
    }

    /// One row per node: `t` then the row-major entries, headed `t,P_0_0,…`
    /// (`Pi_0_0,…` for the mean equation).
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let name = if self.kind == EquationKind::Mean { "Pi" } else { "P" };
        let mut out = String::from("t");
        for i in 0..n {
            for j in 0..n {
                let _ = write!(out, ",{name}_{i}_{j}");
            }
        }
        out.push('\n');
        for (k, v) in self.values.iter().enumerate() {
            let _ = write!(out, "{}", self.grid.node(k));
            for i in 0..n {
                for j in 0..n {
                    let _ = write!(out, ",{}", v[(i, j)]);
                }
            }
            out.push('\n');
        }
        out
    }

    fn finish(mut self, spec: &GameSpec, equation: Equation<'_>) -> Self {
        self.residual_norm = riccati_residual(&self, spec, equation);
        self.strongly_regular = self.min_margin_1() >= self.delta && self.min_margin_2() >= self.delta;
        self
    }
}

/// Selector for [`riccati_residual`].
#[derive(Debug, Clone, Copy)]
pub enum Equation<'a> {
    Game,
    Control(Player),
    /// The mean equation, driven by the given game solution.
    Mean(&'a RiccatiSolution),
}

fn rhs_at(spec: &GameSpec, equation: Equation<'_>, t: f64, side: Side, v: &Mat, max_condition: f64) -> Result<Mat> {
    let sn = spec.snapshot_side(t, side);
    Ok(match equation {
        Equation::Game => game_rhs(t, &sn, &Channel::of(spec, &sn, None), v, max_condition, "R + DᵀPD")?.deriv,
        Equation::Control(p) => {
            game_rhs(t, &sn, &Channel::of(spec, &sn, Some(p)), v, max_condition, "Rᵢᵢ + DᵢᵀPᵢDᵢ")?.deriv
        }
        Equation::Mean(p) => mean_rhs(t, &MeanData::new(&sn, &p.value_at(t)), v, max_condition)?.deriv,
    })
}

/// Sup over nodes `2..=N−2` of the Frobenius norm of the equation residual,
/// with the time derivative taken by fourth-order central differences.
/// Returns `∞` if a weight is singular at some node.
pub fn riccati_residual(p: &RiccatiSolution, spec: &GameSpec, equation: Equation<'_>) -> f64 {
    let n = p.grid.steps();
    if n < 4 {
        return 0.0;
    }
    let h = p.grid.step_size();
    let v = &p.values;
    let mut worst = 0.0_f64;
    for k in 2..=n - 2 {
        let fd = (&v[k - 2] - &v[k - 1] * 8.0 + &v[k + 1] * 8.0 - &v[k + 2]) / (12.0 * h);
        match rhs_at(spec, equation, p.grid.node(k), Side::Right, &v[k], f64::INFINITY) {
            Ok(d) => worst = worst.max((fd - d).norm()),
            Err(_) => return f64::INFINITY,
        }
    }
    worst
}

/// Game Riccati equation, `P(T) = G`.
pub fn solve_game_riccati(spec: &GameSpec, grid: &TimeGrid, opts: &RiccatiOptions) -> Result<RiccatiSolution> {
    let rhs = |t: f64, side: Side, v: &Mat| {
        let sn = spec.snapshot_side(t, side);
        let e = game_rhs(t, &sn, &Channel::of(spec, &sn, None), v, opts.max_condition, "R + DᵀPD")?;
        Ok((e.deriv, e.rate))
    };
    let sweep = sweep_backward(grid, spec.weights.g.clone(), opts.kappa, |_| 1, rhs)?;
    let (margin_1, margin_2) = sweep
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let sn = spec.snapshot(grid.node(k));
            block_margins(spec, &(&sn.r + sn.d.transpose() * v * &sn.d))
        })
        .unzip();
    Ok(RiccatiSolution {
        kind: EquationKind::Game,
        grid: *grid,
        values: sweep.values,
        margin_1,
        margin_2,
        residual_norm: f64::NAN,
        strongly_regular: false,
        delta: opts.delta,
        max_asymmetry: sweep.max_asymmetry,
        substeps: sweep.substeps,
        dense: sweep.dense,
    }
    .finish(spec, Equation::Game))
}

/// Control Riccati equation of one player, `Pᵢ(T) = G`.
pub fn solve_control_riccati(
    spec: &GameSpec,
    player: Player,
    grid: &TimeGrid,
    opts: &RiccatiOptions,
) -> Result<RiccatiSolution> {
    let rhs = |t: f64, side: Side, v: &Mat| {
        let sn = spec.snapshot_side(t, side);
        let ch = Channel::of(spec, &sn, Some(player));
        let e = game_rhs(t, &sn, &ch, v, opts.max_condition, "Rᵢᵢ + DᵢᵀPᵢDᵢ")?;
        Ok((e.deriv, e.rate))
    };
    let sweep = sweep_backward(grid, spec.weights.g.clone(), opts.kappa, |_| 1, rhs)?;
    let margin: Vec<f64> = sweep
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let sn = spec.snapshot(grid.node(k));
            let ch = Channel::of(spec, &sn, Some(player));
            crate::linalg::min_eigenvalue(&((&ch.r + ch.d.transpose() * v * &ch.d) * player.sign()))
        })
        .collect();
    Ok(RiccatiSolution {
        kind: EquationKind::Control(player),
        grid: *grid,
        values: sweep.values,
        margin_1: margin.clone(),
        margin_2: margin,
        residual_norm: f64::NAN,
        strongly_regular: false,
        delta: opts.delta,
        max_asymmetry: sweep.max_asymmetry,
        substeps: sweep.substeps,
        dense: sweep.dense,
    }
    .finish(spec, Equation::Control(player)))
}

/// Mean Riccati equation driven by the game solution `p`, `Π(T) = G + Ḡ`.
pub fn solve_mean_riccati(
    spec: &GameSpec,
    p: &RiccatiSolution,
    grid: &TimeGrid,
    opts: &RiccatiOptions,
) -> Result<RiccatiSolution> {
    if p.grid != *grid {
        return Err(Error::GridMismatch("the game solution lives on a different grid".into()));
    }
    let rhs = |t: f64, side: Side, v: &Mat| {
        let sn = spec.snapshot_side(t, side);
        let e = mean_rhs(t, &MeanData::new(&sn, &p.value_at(t)), v, opts.max_condition)?;
        Ok((e.deriv, e.rate))
    };
    let terminal = &spec.weights.g + &spec.weights.g_bar;
    let sweep = sweep_backward(grid, terminal, opts.kappa, |k| p.substeps[k], rhs)?;
    let (margin_1, margin_2) = (0..grid.len())
        .map(|k| {
            let sn = spec.snapshot(grid.node(k));
            block_margins(spec, &MeanData::new(&sn, &p.values[k]).sigma_bar)
        })
        .unzip();
    Ok(RiccatiSolution {
        kind: EquationKind::Mean,
        grid: *grid,
        values: sweep.values,
        margin_1,
        margin_2,
        residual_norm: f64::NAN,
        strongly_regular: false,
        delta: opts.delta,
        max_asymmetry: sweep.max_asymmetry,
        substeps: sweep.substeps,
        dense: sweep.dense,
    }
    .finish(spec, Equation::Mean(p)))
}
