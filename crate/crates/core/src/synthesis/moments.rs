//! Exact first and second moments of (several coupled copies of) the
//! closed-loop mean-field state, and the functionals built from them.
//!
//! Copy `j` runs the control `uⱼ = Θⱼ(X_src − E X_src) + Θ̄ⱼ E X_src + vⱼ`
//! where `src` is either `j` itself (a feedback law) or another copy (an
//! open-loop replay of that copy's control). All copies share one Brownian
//! motion, so their joint law is Gaussian with mean and covariance obeying
//! linear ODEs:
//!
//! * `ṁⱼ = (A+Ā)mⱼ + (B+B̄)E uⱼ`,
//! * `Λ̇ = FΛ + ΛFᵀ + 𝒢Λ𝒢ᵀ + ggᵀ`, with `F`, `𝒢` the stacked fluctuation
//!   drift and diffusion and `gⱼ = (C+C̄)mⱼ + (D+D̄)E uⱼ`.
//!
//! Running quadratic observables are appended to the ODE state, so the
//! whole system is integrated with one RK4 sweep.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_inner, symmetrize, Mat, Vector};
use crate::model::{GameSpec, Side, TimeGrid};
use crate::riccati::substeps_for;

use super::law::{ControlLaw, OffsetPath};

const KAPPA: f64 = 0.05;

/// Coefficients and gains frozen at one RK4 stage time.
pub(crate) struct StageData {
    pub t: f64,
    pub side: Side,
    pub a: Mat,
    pub a_mf: Mat,
    pub b: Mat,
    pub b_mf: Mat,
    pub c: Mat,
    pub c_mf: Mat,
    pub d: Mat,
    pub d_mf: Mat,
    pub w: Mat,
    pub w_bar: Mat,
    pub gains: Vec<(Mat, Mat)>,
}

impl StageData {
    fn new(spec: &GameSpec, laws: &[&ControlLaw], t: f64, side: Side) -> Result<Self> {
        let sn = spec.snapshot_side(t, side);
        let gains = laws.iter().map(|l| l.gains_at(spec, t, side)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t,
            side,
            a_mf: &sn.a + &sn.a_bar,
            b_mf: &sn.b + &sn.b_bar,
            c_mf: &sn.c + &sn.c_bar,
            d_mf: &sn.d + &sn.d_bar,
            w: sn.running_weight(),
            w_bar: sn.running_weight_bar(),
            a: sn.a,
            b: sn.b,
            c: sn.c,
            d: sn.d,
            gains,
        })
    }

    fn stiffness(&self) -> f64 {
        self.gains
            .iter()
            .map(|(th, thb)| {
                2.0 * (&self.a + &self.b * th).norm()
                    + (&self.c + &self.d * th).norm_squared()
                    + 2.0 * (&self.a_mf + &self.b_mf * thb).norm()
            })
            .fold(2.0 * self.a.norm() + self.c.norm_squared(), f64::max)
    }
}

/// `[left, mid, right]` stage data of one RK4 substep.
type Substep = [StageData; 3];

/// Stage tables of a set of control laws on a grid. Building the plan
/// evaluates every coefficient and gain once; each run then only evaluates
/// the (cheap) offsets.
pub(crate) struct MomentPlan<'a> {
    spec: &'a GameSpec,
    intervals: Vec<Vec<Substep>>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EngineCopy<'b> {
    pub gains: usize,
    pub source: usize,
    pub offset: &'b OffsetPath,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Observable {
    Cost(usize),
    ControlSq(usize),
    ControlDiffSq(usize, usize),
}

impl Observable {
    fn width(self) -> usize {
        match self {
            Observable::Cost(_) => 3,
            _ => 1,
        }
    }
}

/// Cost split into the part carried by the state fluctuation and the part
/// carried by the means.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CostParts {
    pub running_fluctuation: f64,
    pub running_mean: f64,
    pub running_mean_field: f64,
    pub terminal_fluctuation: f64,
    pub terminal_mean: f64,
    pub terminal_mean_field: f64,
}

impl CostParts {
    pub fn total(&self) -> f64 {
        self.running_fluctuation
            + self.running_mean
            + self.running_mean_field
            + self.terminal_fluctuation
            + self.terminal_mean
            + self.terminal_mean_field
    }

    /// Everything determined by the mean path alone.
    pub fn deterministic(&self) -> f64 {
        self.running_mean + self.running_mean_field + self.terminal_mean + self.terminal_mean_field
    }
}

pub(crate) struct RunOutput {
    pub nodes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub costs: Vec<CostParts>,
}

impl<'a> MomentPlan<'a> {
    pub fn new(spec: &'a GameSpec, grid: &TimeGrid, laws: &[&ControlLaw]) -> Result<Self> {
        if (spec.horizon - grid.horizon()).abs() > 1e-12 * spec.horizon {
            return Err(Error::GridMismatch("grid horizon differs from the game horizon".into()));
        }
        for l in laws {
            l.check_dims(spec)?;
        }
        let h = grid.step_size();
        let intervals = (0..grid.steps())
            .into_par_iter()
            .map(|k| {
                let (t0, t1) = (grid.node(k), grid.node(k + 1));
                let left = StageData::new(spec, laws, t0, Side::Right)?;
                let right = StageData::new(spec, laws, t1, Side::Left)?;
                let hint = laws.iter().map(|l| l.substep_hint(grid, k)).max().unwrap_or(1);
                let nsub = hint.max(substeps_for(h, left.stiffness().max(right.stiffness()), KAPPA));
                let hs = (t1 - t0) / nsub as f64;
                let mut subs = Vec::with_capacity(nsub);
                let mut l = Some(left);
                for j in 0..nsub {
                    let tl = t0 + j as f64 * hs;
                    let tr = if j + 1 == nsub { t1 } else { t0 + (j + 1) as f64 * hs };
                    let sl = match l.take() {
                        Some(s) => s,
                        None => StageData::new(spec, laws, tl, Side::Right)?,
                    };
                    let sm = StageData::new(spec, laws, 0.5 * (tl + tr), Side::Right)?;
                    let sr = if j + 1 == nsub {
                        StageData::new(spec, laws, tr, Side::Left)?
                    } else {
                        StageData::new(spec, laws, tr, Side::Right)?
                    };
                    subs.push([sl, sm, sr]);
                }
                Ok(subs)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, intervals })
    }

    /// Stage data at node `k` (right-sided, except at the horizon).
    pub fn node_stage(&self, k: usize) -> &StageData {
        if k < self.intervals.len() {
            &self.intervals[k][0][0]
        } else {
            &self.intervals[k - 1].last().expect("non-empty interval")[2]
        }
    }

    pub fn run(
        &self,
        copies: &[EngineCopy<'_>],
        x: &Vector,
        observables: &[Observable],
        record_nodes: bool,
    ) -> Result<RunOutput> {
        let n = self.spec.n;
        if x.len() != n {
            return Err(Error::InvalidArgument(format!("initial state has length {}, expected {n}", x.len())));
        }
        let kn = copies.len() * n;
        let acc_len: usize = observables.iter().map(|o| o.width()).sum();
        let dim = kn + kn * kn + acc_len;
        let mut y = vec![0.0; dim];
        for j in 0..copies.len() {
            y[j * n..(j + 1) * n].copy_from_slice(x.as_slice());
        }
        let mut nodes = Vec::new();
        if record_nodes {
            nodes.push(y.clone());
        }
        let rhs = |st: &StageData, y: &[f64]| self.derivative(st, copies, observables, y);
        for subs in &self.intervals {
            for [sl, sm, sr] in subs {
                let dt = sr.t - sl.t;
                let k1 = rhs(sl, &y);
                let k2 = rhs(sm, &axpy(&y, 0.5 * dt, &k1));
                let k3 = rhs(sm, &axpy(&y, 0.5 * dt, &k2));
                let k4 = rhs(sr, &axpy(&y, dt, &k3));
                for i in 0..dim {
                    y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { t: sr.t, stage: "propagating moments" });
                }
            }
            if record_nodes {
                nodes.push(y.clone());
            }
        }

        let cov = symmetrize(&Mat::from_column_slice(kn, kn, &y[kn..kn + kn * kn]));
        let g = &self.spec.weights.g;
        let g_bar = &self.spec.weights.g_bar;
        let mut values = Vec::with_capacity(observables.len());
        let mut costs = Vec::with_capacity(observables.len());
        let mut off = kn + kn * kn;
        for o in observables {
            match *o {
                Observable::Cost(j) => {
                    let m = Vector::from_column_slice(&y[j * n..(j + 1) * n]);
                    let lam = cov.view((j * n, j * n), (n, n)).into_owned();
                    let parts = CostParts {
                        running_fluctuation: y[off],
                        running_mean: y[off + 1],
                        running_mean_field: y[off + 2],
                        terminal_fluctuation: frobenius_inner(g, &lam),
                        terminal_mean: m.dot(&(g * &m)),
                        terminal_mean_field: m.dot(&(g_bar * &m)),
                    };
                    values.push(parts.total());
                    costs.push(parts);
                }
                _ => {
                    values.push(y[off]);
                    costs.push(CostParts::default());
                }
            }
            off += o.width();
        }
        Ok(RunOutput { nodes, values, costs })
    }

    fn derivative(&self, st: &StageData, copies: &[EngineCopy<'_>], observables: &[Observable], y: &[f64]) -> Vec<f64> {
        let n = self.spec.n;
        let k = copies.len();
        let kn = k * n;
        let mut out = vec![0.0; y.len()];
        let cov = Mat::from_column_slice(kn, kn, &y[kn..kn + kn * kn]);
        let mean = |j: usize| Vector::from_column_slice(&y[j * n..(j + 1) * n]);

        let mut f = Mat::zeros(kn, kn);
        let mut gd = Mat::zeros(kn, kn);
        let mut g = Vector::zeros(kn);
        let mut means = Vec::with_capacity(k);
        let mut eu = Vec::with_capacity(k);
        for (j, cp) in copies.iter().enumerate() {
            let (th, thb) = &st.gains[cp.gains];
            let mj = mean(j);
            let u = thb * mean(cp.source) + cp.offset.eval(st.t, st.side);
            let dm = &st.a_mf * &mj + &st.b_mf * &u;
            out[j * n..(j + 1) * n].copy_from_slice(dm.as_slice());
            g.rows_mut(j * n, n).copy_from(&(&st.c_mf * &mj + &st.d_mf * &u));
            let mut fb = f.view_mut((j * n, j * n), (n, n));
            fb += &st.a;
            let mut gb = gd.view_mut((j * n, j * n), (n, n));
            gb += &st.c;
            let mut fs = f.view_mut((j * n, cp.source * n), (n, n));
            fs += &st.b * th;
            let mut gs = gd.view_mut((j * n, cp.source * n), (n, n));
            gs += &st.d * th;
            means.push(mj);
            eu.push(u);
        }
        let fl = &f * &cov;
        let dcov = &fl + fl.transpose() + &gd * &cov * gd.transpose() + &g * g.transpose();
        out[kn..kn + kn * kn].copy_from_slice(dcov.as_slice());

        // Maps from the stacked fluctuation to a copy's control fluctuation.
        let control_map = |j: usize| {
            let m = st.b.ncols();
            let mut h = Mat::zeros(m, kn);
            h.view_mut((0, copies[j].source * n), (m, n)).copy_from(&st.gains[copies[j].gains].0);
            h
        };
        let quad = |h: &Mat| frobenius_inner(&(h * &cov), h);

        let mut off = kn + kn * kn;
        for o in observables {
            match *o {
                Observable::Cost(j) => {
                    let m = st.b.ncols();
                    let mut t = Mat::zeros(n + m, kn);
                    t.view_mut((0, j * n), (n, n)).fill_with_identity();
                    t.view_mut((n, 0), (m, kn)).copy_from(&control_map(j));
                    let tct = &t * &cov * t.transpose();
                    let mu = Vector::from_iterator(n + m, means[j].iter().chain(eu[j].iter()).copied());
                    out[off] = frobenius_inner(&st.w, &tct);
                    out[off + 1] = mu.dot(&(&st.w * &mu));
                    out[off + 2] = mu.dot(&(&st.w_bar * &mu));
                }
                Observable::ControlSq(j) => {
                    out[off] = quad(&control_map(j)) + eu[j].norm_squared();
                }
                Observable::ControlDiffSq(a, b) => {
                    out[off] = quad(&(control_map(a) - control_map(b))) + (&eu[a] - &eu[b]).norm_squared();
                }
            }
            off += o.width();
        }
        out
    }
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

/// Node-wise moments of the state and control under one law.
#[derive(Debug, Clone)]
pub struct MomentState {
    pub times: Vec<f64>,
    /// `E[X(t)]`.
    pub mean: Vec<Vector>,
    /// `E[(X−E X)(X−E X)ᵀ]`.
    pub cov: Vec<Mat>,
    /// `E[u(t)]`.
    pub control_mean: Vec<Vector>,
    /// `E[u(t)u(t)ᵀ]`.
    pub control_second: Vec<Mat>,
}

impl MomentState {
    /// Header `t,m_0,…,L_0_0,…` (row-major covariance), one row per node.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let n = self.mean[0].len();
        let mut out = String::from("t");
        for i in 0..n {
            let _ = write!(out, ",m_{i}");
        }
        for i in 0..n {
            for j in 0..n {
                let _ = write!(out, ",L_{i}_{j}");
            }
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t}");
            for v in self.mean[k].iter() {
                let _ = write!(out, ",{v}");
            }
            for i in 0..n {
                for j in 0..n {
                    let _ = write!(out, ",{}", self.cov[k][(i, j)]);
                }
            }
            out.push('\n');
        }
        out
    }
}

fn single<'b>(law: &'b ControlLaw) -> [EngineCopy<'b>; 1] {
    [EngineCopy { gains: 0, source: 0, offset: &law.offset }]
}

pub fn propagate_moments(spec: &GameSpec, law: &ControlLaw, x: &Vector, grid: &TimeGrid) -> Result<MomentState> {
    let plan = MomentPlan::new(spec, grid, &[law])?;
    let run = plan.run(&single(law), x, &[], true)?;
    let n = spec.n;
    let mut st = MomentState { times: grid.nodes(), mean: vec![], cov: vec![], control_mean: vec![], control_second: vec![] };
    for (k, y) in run.nodes.iter().enumerate() {
        let m = Vector::from_column_slice(&y[..n]);
        let cov = symmetrize(&Mat::from_column_slice(n, n, &y[n..n + n * n]));
        let stage = plan.node_stage(k);
        let (th, thb) = &stage.gains[0];
        let eu = thb * &m + law.offset.eval(stage.t, stage.side);
        st.control_second.push(th * &cov * th.transpose() + &eu * eu.transpose());
        st.control_mean.push(eu);
        st.mean.push(m);
        st.cov.push(cov);
    }
    Ok(st)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Moments,
    MonteCarlo,
}

/// `J(x; u)` with its breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct ValueReport {
    pub value: f64,
    pub terms: CostParts,
    pub method: Method,
    /// Standard error of the estimate; zero for the moment method.
    pub stderr: f64,
    pub paths: Option<usize>,
}

pub fn evaluate_functional(spec: &GameSpec, law: &ControlLaw, x: &Vector, grid: &TimeGrid) -> Result<ValueReport> {
    let plan = MomentPlan::new(spec, grid, &[law])?;
    let run = plan.run(&single(law), x, &[Observable::Cost(0)], false)?;
    Ok(ValueReport { value: run.values[0], terms: run.costs[0], method: Method::Moments, stderr: 0.0, paths: None })
}

/// `E∫₀ᵀ|u|² ds`.
pub fn control_norm_sq(spec: &GameSpec, law: &ControlLaw, x: &Vector, grid: &TimeGrid) -> Result<f64> {
    let plan = MomentPlan::new(spec, grid, &[law])?;
    Ok(plan.run(&single(law), x, &[Observable::ControlSq(0)], false)?.values[0])
}

/// `E∫₀ᵀ|u_a − u_b|² ds` for two laws started at the same `x` and driven by
/// the same Brownian motion.
pub fn control_distance_sq(
    spec: &GameSpec,
    a: &ControlLaw,
    b: &ControlLaw,
    x: &Vector,
    grid: &TimeGrid,
) -> Result<f64> {
    let plan = MomentPlan::new(spec, grid, &[a, b])?;
    let copies =
        [EngineCopy { gains: 0, source: 0, offset: &a.offset }, EngineCopy { gains: 1, source: 1, offset: &b.offset }];
    Ok(plan.run(&copies, x, &[Observable::ControlDiffSq(0, 1)], false)?.values[0].max(0.0))
}
