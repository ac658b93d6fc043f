use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{pairwise_sum, Mat, Vector};
use crate::model::{GameSpec, TimeGrid};

use super::law::ControlLaw;
use super::moments::{EngineCopy, Method, MomentPlan, Observable, ValueReport};

/// Brownian increments for a Monte Carlo run.
///
/// Path `i` draws its increments from a ChaCha8 stream selected by `i`, so
/// every control evaluated with the same bundle sees the same noise, and
/// results do not depend on how paths are distributed over threads. The
/// increments are regenerated on demand rather than stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NoiseBundle {
    pub seed: u64,
    pub paths: usize,
}

impl NoiseBundle {
    pub fn new(seed: u64, paths: usize) -> Self {
        Self { seed, paths }
    }

    fn rng(&self, path: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path as u64);
        rng
    }

    /// The `ΔW` sequence of one path on `grid` (variance `h` per step).
    pub fn increments(&self, path: usize, grid: &TimeGrid) -> Vec<f64> {
        let sd = grid.step_size().sqrt();
        let mut rng = self.rng(path);
        (0..grid.steps()).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

/// Per-node data of the fluctuation recursion, flattened row-major.
struct NodeData {
    drift: Vec<f64>,
    diff: Vec<f64>,
    forcing: Vec<f64>,
    quad: Vec<f64>,
    lin: Vec<f64>,
}

fn row_major(m: &Mat) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn matvec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let n = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Monte Carlo estimate of `J(x; u)`.
///
/// The mean `E[X]` is the exact solution of its ODE (it is closed for the
/// affine class), so only the fluctuation `Y = X − E[X]` is simulated, by
/// Euler–Maruyama, and the part of the cost fixed by the mean path is taken
/// from the moment solution. Running costs use the trapezoid rule on the
/// grid.
pub fn evaluate_functional_mc(
    spec: &GameSpec,
    law: &ControlLaw,
    x: &Vector,
    grid: &TimeGrid,
    noise: &NoiseBundle,
) -> Result<ValueReport> {
    if noise.paths < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least two paths".into()));
    }
    let n = spec.n;
    let plan = MomentPlan::new(spec, grid, &[law])?;
    let copy = [EngineCopy { gains: 0, source: 0, offset: &law.offset }];
    let run = plan.run(&copy, x, &[Observable::Cost(0)], true)?;
    let exact = run.costs[0];

    let nodes: Vec<NodeData> = (0..grid.len())
        .map(|k| {
            let st = plan.node_stage(k);
            let (th, thb) = &st.gains[0];
            let m = Vector::from_column_slice(&run.nodes[k][..n]);
            let eu = thb * &m + law.offset.eval(st.t, st.side);
            let ctl = th.nrows();
            let mut lift = Mat::zeros(n + ctl, n);
            lift.view_mut((0, 0), (n, n)).fill_with_identity();
            lift.view_mut((n, 0), (ctl, n)).copy_from(th);
            let mu = Vector::from_iterator(n + ctl, m.iter().chain(eu.iter()).copied());
            NodeData {
                drift: row_major(&(&st.a + &st.b * th)),
                diff: row_major(&(&st.c + &st.d * th)),
                forcing: (&st.c_mf * &m + &st.d_mf * &eu).as_slice().to_vec(),
                quad: row_major(&(lift.transpose() * &st.w * &lift)),
                lin: (lift.transpose() * (&st.w * &mu) * 2.0).as_slice().to_vec(),
            }
        })
        .collect();
    let g = row_major(&spec.weights.g);
    let m_end = Vector::from_column_slice(&run.nodes[grid.steps()][..n]);
    let g_lin: Vec<f64> = (&spec.weights.g * &m_end * 2.0).as_slice().to_vec();
    let h = grid.step_size();
    let sd = h.sqrt();

    // Fluctuation part of the cost along one path: ∫ (YᵀW̃Y + ℓᵀY) + YᵀGY + 2m(T)ᵀGY.
    let sample = |path: usize| -> (f64, f64) {
        let mut rng = noise.rng(path);
        let mut y = vec![0.0; n];
        let mut dy = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        let running = |nd: &NodeData, y: &[f64], tmp: &mut [f64]| {
            matvec(&nd.quad, y, tmp);
            dot(y, tmp) + dot(&nd.lin, y)
        };
        let mut integral = 0.5 * running(&nodes[0], &y, &mut tmp);
        for (k, nd) in nodes.iter().enumerate().take(grid.steps()) {
            let dw = sd * rng.sample::<f64, _>(StandardNormal);
            matvec(&nd.drift, &y, &mut dy);
            matvec(&nd.diff, &y, &mut tmp);
            for i in 0..n {
                y[i] += dy[i] * h + (tmp[i] + nd.forcing[i]) * dw;
            }
            let w = if k + 1 == grid.steps() { 0.5 } else { 1.0 };
            integral += w * running(&nodes[k + 1], &y, &mut tmp);
        }
        matvec(&g, &y, &mut tmp);
        (integral * h, dot(&y, &tmp) + dot(&g_lin, &y))
    };
    let pairs: Vec<(f64, f64)> = (0..noise.paths).into_par_iter().map(sample).collect();
    let samples: Vec<f64> = pairs.iter().map(|(a, b)| a + b).collect();
    let p = noise.paths as f64;
    let mean = pairwise_sum(&samples) / p;
    let dev: Vec<f64> = samples.iter().map(|s| (s - mean) * (s - mean)).collect();
    let var = pairwise_sum(&dev) / (p - 1.0);
    if !mean.is_finite() {
        return Err(Error::NonFinite { t: grid.horizon(), stage: "Monte Carlo sampling" });
    }
    let mut terms = exact;
    terms.running_fluctuation = pairwise_sum(&pairs.iter().map(|q| q.0).collect::<Vec<_>>()) / p;
    terms.terminal_fluctuation = pairwise_sum(&pairs.iter().map(|q| q.1).collect::<Vec<_>>()) / p;
    Ok(ValueReport {
        value: exact.deterministic() + mean,
        terms,
        method: Method::MonteCarlo,
        stderr: (var / p).sqrt(),
        paths: Some(noise.paths),
    })
}
