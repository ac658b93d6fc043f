use crate::error::{Error, Result};
use crate::linalg::{asymmetry, symmetrize, Mat};
use crate::model::{Side, TimeGrid};

use super::dense::DensePath;

/// Upper bound on substeps per grid interval.
pub(crate) const MAX_SUBSTEPS: usize = 100_000;

/// Output of a backward matrix RK4 sweep.
pub(crate) struct Sweep {
    pub values: Vec<Mat>,
    pub dense: DensePath,
    pub substeps: Vec<usize>,
    pub max_asymmetry: f64,
}

pub(crate) fn substeps_for(h: f64, rate: f64, kappa: f64) -> usize {
    if !rate.is_finite() {
        return MAX_SUBSTEPS;
    }
    ((h * rate / kappa).ceil() as usize).clamp(1, MAX_SUBSTEPS)
}

/// Integrates `Ṗ = rhs(t, P)` backward from `P(T) = terminal` with classical
/// RK4. Each grid interval is split into equal substeps, as many as the
/// local stiffness rate reported by `rhs` requires (`h·rate ≤ kappa`); an
/// interval whose stages reveal a larger rate is redone with more substeps.
pub(crate) fn sweep_backward<F>(
    grid: &TimeGrid,
    terminal: Mat,
    kappa: f64,
    min_substeps: impl Fn(usize) -> usize,
    rhs: F,
) -> Result<Sweep>
where
    F: Fn(f64, Side, &Mat) -> Result<(Mat, f64)>,
{
    let n = grid.steps();
    let h = grid.step_size();
    let mut values = vec![Mat::zeros(0, 0); n + 1];
    let mut substeps = vec![0; n];
    let mut dense = DensePath::with_capacity(n);
    let mut max_asym = 0.0_f64;
    values[n] = terminal;

    for k in (0..n).rev() {
        let t0 = grid.node(k);
        let t1 = grid.node(k + 1);
        let p_end = values[k + 1].clone();
        let (d_end, rate_end) = rhs(t1, Side::Left, &p_end)?;
        let mut nsub = min_substeps(k).max(substeps_for(h, rate_end, kappa));
        loop {
            let hs = (t1 - t0) / nsub as f64;
            let mut pieces = Vec::with_capacity(nsub);
            let mut p = p_end.clone();
            let mut k1 = d_end.clone();
            let mut max_rate = rate_end;
            let mut asym = 0.0_f64;
            for j in 0..nsub {
                let tr = if j == 0 { t1 } else { t1 - j as f64 * hs };
                let tl = if j + 1 == nsub { t0 } else { t1 - (j + 1) as f64 * hs };
                let dt = tr - tl;
                if j > 0 {
                    let (d, r) = rhs(tr, Side::Right, &p)?;
                    k1 = d;
                    max_rate = max_rate.max(r);
                }
                let tm = 0.5 * (tl + tr);
                let (k2, r2) = rhs(tm, Side::Right, &(&p - &k1 * (0.5 * dt)))?;
                let (k3, r3) = rhs(tm, Side::Right, &(&p - &k2 * (0.5 * dt)))?;
                let (k4, r4) = rhs(tl, Side::Right, &(&p - &k3 * dt))?;
                max_rate = max_rate.max(r2).max(r3).max(r4);
                let raw = &p - (&k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) * (dt / 6.0);
                if raw.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { t: tl, stage: "integrating a Riccati equation" });
                }
                asym = asym.max(asymmetry(&raw));
                let next = symmetrize(&raw);
                pieces.push((tl, tr, next.clone(), p, k1.clone()));
                p = next;
            }
            let required = substeps_for(h, max_rate, kappa);
            if required > nsub && nsub < MAX_SUBSTEPS {
                nsub = required;
                continue;
            }
            // Left-end derivatives: the next piece's k1, or a fresh
            // right-sided evaluation at the grid node.
            let (d_start, _) = rhs(t0, Side::Right, &p)?;
            let mut d_left = d_start;
            for (tl, tr, vl, vr, dr) in pieces.into_iter().rev() {
                dense.push(tl, tr, vl, vr, d_left, dr.clone());
                d_left = dr;
            }
            values[k] = p;
            substeps[k] = nsub;
            max_asym = max_asym.max(asym);
            break;
        }
    }
    dense.finish();
    Ok(Sweep { values, dense, substeps, max_asymmetry: max_asym })
}
