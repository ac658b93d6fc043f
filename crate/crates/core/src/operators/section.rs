//! Finite sections of the quadratic functional over piecewise-constant
//! deterministic controls.
//!
//! `J(x; u) = ⟨Mu, u⟩ + 2⟨Kx, u⟩ + ⟨Ox, x⟩` restricted to the span of
//! normalized block indicators `1_block / √|block|` in each control
//! coordinate. Every entry is obtained by polarization from exact
//! evaluations of `J`, so the coefficient inner product equals the `L²`
//! inner product of the controls.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{max_eigenpair, min_eigenpair, Mat, SymmetricSolver, Vector};
use crate::model::{GameSpec, Player, Side, TimeGrid};
use crate::riccati::substeps_for;

use super::block::{perturbed_inverse, BlockOperator};

const KAPPA: f64 = 0.05;

/// Coefficients at one stage time, row-major.
struct FlatStage {
    a: Vec<f64>,
    a_mf: Vec<f64>,
    b_mf: Vec<f64>,
    c: Vec<f64>,
    c_mf: Vec<f64>,
    d_mf: Vec<f64>,
    q: Vec<f64>,
    w: Vec<f64>,
}

fn flat(m: &Mat) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl FlatStage {
    fn new(spec: &GameSpec, t: f64, side: Side) -> Self {
        let sn = spec.snapshot_side(t, side);
        Self {
            a: flat(&sn.a),
            a_mf: flat(&(&sn.a + &sn.a_bar)),
            b_mf: flat(&(&sn.b + &sn.b_bar)),
            c: flat(&sn.c),
            c_mf: flat(&(&sn.c + &sn.c_bar)),
            d_mf: flat(&(&sn.d + &sn.d_bar)),
            q: flat(&sn.q),
            w: flat(&(sn.running_weight() + sn.running_weight_bar())),
        }
    }
}

/// Moment-ODE evaluator of `J(x; u)` for deterministic controls that are
/// constant on each grid step. With `u` deterministic, the control has no
/// fluctuation, so the state covariance only sees `tr(QΛ)` in the running
/// cost and the means carry everything else.
pub(crate) struct StepwiseEvaluator {
    n: usize,
    m: usize,
    steps: Vec<Vec<(f64, [FlatStage; 3])>>,
    g: Vec<f64>,
    g_total: Vec<f64>,
}

struct Scratch {
    y: Vec<f64>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    mu: Vec<f64>,
    g: Vec<f64>,
    al: Vec<f64>,
    cl: Vec<f64>,
}

impl StepwiseEvaluator {
    pub fn new(spec: &GameSpec, grid: &TimeGrid) -> Self {
        let h = grid.step_size();
        let steps = (0..grid.steps())
            .into_par_iter()
            .map(|k| {
                let (t0, t1) = (grid.node(k), grid.node(k + 1));
                let stiff = |t: f64, side: Side| {
                    let sn = spec.snapshot_side(t, side);
                    2.0 * sn.a.norm() + sn.c.norm_squared() + 2.0 * (&sn.a + &sn.a_bar).norm()
                };
                let nsub = substeps_for(h, stiff(t0, Side::Right).max(stiff(t1, Side::Left)), KAPPA);
                let hs = (t1 - t0) / nsub as f64;
                (0..nsub)
                    .map(|j| {
                        let tl = t0 + j as f64 * hs;
                        let tr = if j + 1 == nsub { t1 } else { t0 + (j + 1) as f64 * hs };
                        let right = if j + 1 == nsub { Side::Left } else { Side::Right };
                        (
                            tr - tl,
                            [
                                FlatStage::new(spec, tl, Side::Right),
                                FlatStage::new(spec, 0.5 * (tl + tr), Side::Right),
                                FlatStage::new(spec, tr, right),
                            ],
                        )
                    })
                    .collect()
            })
            .collect();
        Self {
            n: spec.n,
            m: spec.control_dim(),
            steps,
            g: flat(&spec.weights.g),
            g_total: flat(&(&spec.weights.g + &spec.weights.g_bar)),
        }
    }

    fn scratch(&self) -> Scratch {
        let (n, m) = (self.n, self.m);
        let dim = n + n * n + 1;
        Scratch {
            y: vec![0.0; dim],
            k: [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]],
            tmp: vec![0.0; dim],
            mu: vec![0.0; n + m],
            g: vec![0.0; n],
            al: vec![0.0; n * n],
            cl: vec![0.0; n * n],
        }
    }

    /// `(m, Λ, running) ↦ d/dt`, state laid out as `[m | Λ (row-major) | acc]`.
    #[allow(clippy::needless_range_loop)]
    fn derivative(&self, st: &FlatStage, u: &[f64], y: &[f64], out: &mut [f64], s: &mut Scratch) {
        let (n, m) = (self.n, self.m);
        let (mean, rest) = y.split_at(n);
        let lam = &rest[..n * n];
        s.mu[..n].copy_from_slice(mean);
        s.mu[n..].copy_from_slice(u);
        for i in 0..n {
            let mut dm = 0.0;
            let mut g = 0.0;
            for j in 0..n {
                dm += st.a_mf[i * n + j] * mean[j];
                g += st.c_mf[i * n + j] * mean[j];
            }
            for j in 0..m {
                dm += st.b_mf[i * m + j] * u[j];
                g += st.d_mf[i * m + j] * u[j];
            }
            out[i] = dm;
            s.g[i] = g;
        }
        for i in 0..n {
            for j in 0..n {
                let mut al = 0.0;
                let mut cl = 0.0;
                for l in 0..n {
                    al += st.a[i * n + l] * lam[l * n + j];
                    cl += st.c[i * n + l] * lam[l * n + j];
                }
                s.al[i * n + j] = al;
                s.cl[i * n + j] = cl;
            }
        }
        let mut tr_q = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut clc = 0.0;
                for l in 0..n {
                    clc += s.cl[i * n + l] * st.c[j * n + l];
                }
                out[n + i * n + j] = s.al[i * n + j] + s.al[j * n + i] + clc + s.g[i] * s.g[j];
                tr_q += st.q[i * n + j] * lam[j * n + i];
            }
        }
        let p = n + m;
        let mut quad = 0.0;
        for i in 0..p {
            let mut row = 0.0;
            for j in 0..p {
                row += st.w[i * p + j] * s.mu[j];
            }
            quad += s.mu[i] * row;
        }
        out[n + n * n] = tr_q + quad;
    }

    /// `J(x; u)` where `control(k, out)` writes the control on grid step `k`.
    /// Steps before `start` must carry zero state and control.
    pub fn eval(&self, x: &[f64], start: usize, control: impl Fn(usize, &mut [f64])) -> f64 {
        let n = self.n;
        let mut s = self.scratch();
        let mut u = vec![0.0; self.m];
        s.y.iter_mut().for_each(|v| *v = 0.0);
        s.y[..n].copy_from_slice(x);
        let dim = s.y.len();
        for (k, subs) in self.steps.iter().enumerate().skip(start) {
            control(k, &mut u);
            for (dt, [sl, sm, sr]) in subs {
                let dt = *dt;
                let mut k0 = std::mem::take(&mut s.k[0]);
                let mut k1 = std::mem::take(&mut s.k[1]);
                let mut k2 = std::mem::take(&mut s.k[2]);
                let mut k3 = std::mem::take(&mut s.k[3]);
                let y = s.y.clone();
                self.derivative(sl, &u, &y, &mut k0, &mut s);
                let mut tmp = std::mem::take(&mut s.tmp);
                for i in 0..dim {
                    tmp[i] = y[i] + 0.5 * dt * k0[i];
                }
                self.derivative(sm, &u, &tmp, &mut k1, &mut s);
                for i in 0..dim {
                    tmp[i] = y[i] + 0.5 * dt * k1[i];
                }
                self.derivative(sm, &u, &tmp, &mut k2, &mut s);
                for i in 0..dim {
                    tmp[i] = y[i] + dt * k2[i];
                }
                self.derivative(sr, &u, &tmp, &mut k3, &mut s);
                for i in 0..dim {
                    s.y[i] = y[i] + dt / 6.0 * (k0[i] + 2.0 * k1[i] + 2.0 * k2[i] + k3[i]);
                }
                s.tmp = tmp;
                s.k = [k0, k1, k2, k3];
            }
        }
        let (mean, rest) = s.y.split_at(n);
        let mut terminal = 0.0;
        for i in 0..n {
            for j in 0..n {
                terminal += self.g[i * n + j] * rest[j * n + i] + self.g_total[i * n + j] * mean[i] * mean[j];
            }
        }
        rest[n * n] + terminal
    }
}

/// Section of `M`, `K`, `O` over `blocks` equal subintervals per control
/// coordinate. Coefficient index of coordinate `c`, block `b`: `c·blocks + b`
/// (player one's coordinates first).
#[derive(Debug, Clone, Serialize)]
pub struct OperatorSection {
    pub blocks: usize,
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    pub horizon: f64,
    #[serde(skip)]
    pub m: BlockOperator,
    #[serde(skip)]
    pub k: Mat,
    #[serde(skip)]
    pub o: Mat,
}

/// A sparse combination of basis functions.
type Combo = [(usize, f64)];

struct Basis {
    blocks: usize,
    steps_per_block: usize,
    height: f64,
}

impl Basis {
    fn fill(&self, combo: &Combo, step: usize, u: &mut [f64]) {
        u.iter_mut().for_each(|v| *v = 0.0);
        let b = step / self.steps_per_block;
        for &(idx, c) in combo {
            if idx % self.blocks == b {
                u[idx / self.blocks] += c * self.height;
            }
        }
    }

    fn start(&self, combo: &Combo) -> usize {
        combo.iter().map(|(idx, _)| (idx % self.blocks) * self.steps_per_block).min().unwrap_or(0)
    }
}

pub fn build_section(spec: &GameSpec, grid: &TimeGrid, blocks: usize) -> Result<OperatorSection> {
    if blocks == 0 || !grid.steps().is_multiple_of(blocks) {
        return Err(Error::InvalidArgument(format!(
            "{blocks} basis blocks do not divide the {} grid steps",
            grid.steps()
        )));
    }
    if (spec.horizon - grid.horizon()).abs() > 1e-12 * spec.horizon {
        return Err(Error::GridMismatch("grid horizon differs from the game horizon".into()));
    }
    let steps_per_block = grid.steps() / blocks;
    let basis = Basis { blocks, steps_per_block, height: 1.0 / (steps_per_block as f64 * grid.step_size()).sqrt() };
    let ev = StepwiseEvaluator::new(spec, grid);
    let n = spec.n;
    let d = spec.control_dim() * blocks;
    let origin = vec![0.0; n];
    let unit = |j: usize| {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        e
    };
    let j_at = |x: &[f64], combo: &Combo| -> f64 {
        let start = if x.iter().all(|v| *v == 0.0) { basis.start(combo) } else { 0 };
        ev.eval(x, start, |k, u| basis.fill(combo, k, u))
    };

    let singles: Vec<f64> = (0..d).into_par_iter().map(|a| j_at(&origin, &[(a, 1.0)])).collect();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect();
    let pair_values: Vec<f64> = pairs.par_iter().map(|&(a, b)| j_at(&origin, &[(a, 1.0), (b, 1.0)])).collect();
    let mut full = Mat::from_diagonal(&Vector::from_vec(singles.clone()));
    for (&(a, b), &v) in pairs.iter().zip(&pair_values) {
        let e = 0.5 * (v - singles[a] - singles[b]);
        full[(a, b)] = e;
        full[(b, a)] = e;
    }

    let free: Vec<f64> = (0..n).map(|j| j_at(&unit(j), &[])).collect();
    let cross: Vec<f64> =
        (0..d * n).into_par_iter().map(|idx| j_at(&unit(idx % n), &[(idx / n, 1.0)])).collect();
    let k = Mat::from_fn(d, n, |a, j| 0.5 * (cross[a * n + j] - singles[a] - free[j]));
    let mut o = Mat::from_diagonal(&Vector::from_vec(free.clone()));
    for i in 0..n {
        for j in i + 1..n {
            let mut x = unit(i);
            x[j] = 1.0;
            let e = 0.5 * (j_at(&x, &[]) - free[i] - free[j]);
            o[(i, j)] = e;
            o[(j, i)] = e;
        }
    }
    let d1 = spec.m1 * blocks;
    let d2 = spec.m2 * blocks;
    let m = BlockOperator::new(
        full.view((0, 0), (d1, d1)).into_owned(),
        full.view((0, d1), (d1, d2)).into_owned(),
        full.view((d1, d1), (d2, d2)).into_owned(),
    )?;
    Ok(OperatorSection { blocks, n, m1: spec.m1, m2: spec.m2, horizon: spec.horizon, m, k, o })
}

impl OperatorSection {
    pub fn dims(&self) -> (usize, usize) {
        self.m.dims()
    }

    /// `⟨Mc, c⟩ + 2⟨Kx, c⟩ + ⟨Ox, x⟩`.
    pub fn functional(&self, x: &Vector, c: &Vector) -> f64 {
        let full = self.m.full();
        c.dot(&(&full * c)) + 2.0 * c.dot(&(&self.k * x)) + x.dot(&(&self.o * x))
    }

    /// Coefficients of the control `f` (stacked, length `m₁+m₂`), by
    /// averaging it over each block with a 16-point midpoint rule.
    pub fn project(&self, f: impl Fn(f64) -> Vec<f64>) -> Vector {
        let m = self.m1 + self.m2;
        let len = self.horizon / self.blocks as f64;
        let mut out = Vector::zeros(m * self.blocks);
        const PTS: usize = 16;
        for b in 0..self.blocks {
            let mut avg = vec![0.0; m];
            for q in 0..PTS {
                let t = (b as f64 + (q as f64 + 0.5) / PTS as f64) * len;
                for (a, v) in avg.iter_mut().zip(f(t)) {
                    *a += v / PTS as f64;
                }
            }
            for (c, v) in avg.iter().enumerate() {
                out[c * self.blocks + b] = v * len.sqrt();
            }
        }
        out
    }

    /// Control value of coordinate `c` on block `b` for coefficients `coef`.
    pub fn control_value(&self, coef: &Vector, c: usize, b: usize) -> f64 {
        coef[c * self.blocks + b] / (self.horizon / self.blocks as f64).sqrt()
    }

    /// Full `M` section as CSV (header `c_0,…`).
    pub fn m_csv(&self) -> String {
        let full = self.m.full();
        let mut out = (0..full.ncols()).map(|j| format!("c_{j}")).collect::<Vec<_>>().join(",");
        out.push('\n');
        for row in full.row_iter() {
            out.push_str(&row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

/// Direction along which a diagonal block has the wrong sign.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub player: Player,
    /// Full coefficient vector (unit norm).
    pub coefficients: Vec<f64>,
    /// `J(0; w)` along the witness; `< 0` for player one, `> 0` for player two.
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignReport {
    pub min_eig_m11: f64,
    pub max_eig_m22: f64,
    pub tol: f64,
    pub passed: bool,
    /// Only a failure is a certificate; a pass is evidence on the section.
    pub conclusive: bool,
    pub witness: Option<Witness>,
    pub note: &'static str,
}

pub const SECTION_NOTE_PASS: &str =
    "section sign conditions hold: evidence only, the section spans deterministic controls and cannot certify the game";
pub const SECTION_NOTE_FAIL: &str = "sign condition violated along the witness: no open-loop saddle point exists";

/// `λ_min(M₁₁) ≥ −tol` and `λ_max(M₂₂) ≤ tol` on the section.
pub fn check_necessary_condition(section: &OperatorSection, tol: f64) -> SignReport {
    let (d1, _) = section.dims();
    let (lo, v1) = min_eigenpair(&section.m.m11);
    let (hi, v2) = max_eigenpair(&section.m.m22);
    let witness = if lo < -tol {
        let mut c = vec![0.0; section.m.full().nrows()];
        c[..d1].copy_from_slice(v1.as_slice());
        Some(Witness { player: Player::One, coefficients: c, value: lo })
    } else if hi > tol {
        let mut c = vec![0.0; section.m.full().nrows()];
        c[d1..].copy_from_slice(v2.as_slice());
        Some(Witness { player: Player::Two, coefficients: c, value: hi })
    } else {
        None
    };
    let passed = witness.is_none();
    SignReport {
        min_eig_m11: lo,
        max_eig_m22: hi,
        tol,
        passed,
        conclusive: !passed,
        witness,
        note: if passed { SECTION_NOTE_PASS } else { SECTION_NOTE_FAIL },
    }
}

/// Section saddle `u = −M_ε⁻¹Kx` with diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SectionSaddle {
    pub eps: f64,
    pub coefficients: Vec<f64>,
    /// `‖M_ε u + Kx‖`.
    pub residual: f64,
    pub norm: f64,
    pub reference_norm: Option<f64>,
    /// `‖u_ε‖ ≤ ‖v‖` for the supplied reference saddle `v`.
    pub norm_bound_ok: Option<bool>,
    pub condition: Option<f64>,
}

pub const SECTION_MAX_CONDITION: f64 = 1e12;

pub fn solve_section_saddle(
    section: &OperatorSection,
    x: &Vector,
    eps: f64,
    reference: Option<&Vector>,
) -> Result<SectionSaddle> {
    if x.len() != section.n {
        return Err(Error::InvalidArgument(format!("x has length {}, expected {}", x.len(), section.n)));
    }
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("eps must be non-negative, got {eps}")));
    }
    let kx = &section.k * x;
    let (u, op, condition) = if eps == 0.0 {
        let full = section.m.full();
        let solver = SymmetricSolver::new(&full, SECTION_MAX_CONDITION)
            .map_err(|condition| Error::SingularSection { condition })?;
        let u = -solver.solve(&Mat::from_column_slice(kx.len(), 1, kx.as_slice()));
        (Vector::from_column_slice(u.as_slice()), full, Some(solver.condition))
    } else {
        let inv = perturbed_inverse(&section.m, eps)?;
        (-(inv.full() * &kx), section.m.perturbed(eps).full(), None)
    };
    let residual = (&op * &u + &kx).norm();
    let norm = u.norm();
    let reference_norm = reference.map(|v| v.norm());
    Ok(SectionSaddle {
        eps,
        residual,
        norm,
        norm_bound_ok: if eps > 0.0 { reference_norm.map(|r| norm <= r + 1e-9 * (1.0 + r)) } else { None },
        reference_norm,
        condition,
        coefficients: u.iter().copied().collect(),
    })
}
