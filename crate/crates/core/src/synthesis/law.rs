use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::model::{CoefficientPath, GameSpec, Player, Side, TimeGrid};

use super::feedback::FeedbackLaw;

/// Matrix path known at increasing sample times, linear in between and
/// constant outside.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    times: Vec<f64>,
    values: Vec<Mat>,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, values: Vec<Mat>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidArgument("sampled path needs one value per sample time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("sample times must be strictly increasing".into()));
        }
        let shape = values[0].shape();
        if values.iter().any(|v| v.shape() != shape) {
            return Err(Error::InvalidArgument("sampled values must share one shape".into()));
        }
        Ok(Self { times, values })
    }

    pub fn on_grid(grid: &TimeGrid, values: Vec<Mat>) -> Result<Self> {
        Self::new(grid.nodes(), values)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values[0].shape()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Mat] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> Mat {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.values[0].clone();
        }
        if k == self.times.len() {
            return self.values[k - 1].clone();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        &self.values[k - 1] * (1.0 - w) + &self.values[k] * w
    }
}

/// A deterministic vector-valued path (stored as a column matrix).
#[derive(Debug, Clone, PartialEq)]
pub enum VectorSource {
    Path(CoefficientPath),
    Sampled(SampledPath),
}

impl VectorSource {
    fn dim(&self) -> usize {
        match self {
            VectorSource::Path(p) => p.rows(),
            VectorSource::Sampled(s) => s.shape().0,
        }
    }

    fn eval(&self, t: f64, side: Side) -> Mat {
        match self {
            VectorSource::Path(p) => p.value_side(t, side),
            VectorSource::Sampled(s) => s.eval(t),
        }
    }
}

/// Deterministic control offset `Σ cₖ vₖ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetPath {
    dim: usize,
    terms: Vec<(f64, VectorSource)>,
}

impl OffsetPath {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn from_source(source: VectorSource) -> Result<Self> {
        Self::zero(source.dim()).plus(1.0, source)
    }

    pub fn plus(mut self, scale: f64, source: VectorSource) -> Result<Self> {
        if source.dim() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "offset of dimension {} added to a path of dimension {}",
                source.dim(),
                self.dim
            )));
        }
        if scale != 0.0 {
            self.terms.push((scale, source));
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, t: f64, side: Side) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for (c, s) in &self.terms {
            out += s.eval(t, side).column(0) * *c;
        }
        out
    }
}

/// Gains of an affine law `u = Θ(X − E[X]) + Θ̄E[X] + v`.
#[derive(Debug, Clone)]
pub enum Gains {
    Zero,
    /// Saddle feedback evaluated from the Riccati solutions at any time.
    Feedback(Arc<FeedbackLaw>),
    Sampled { theta: SampledPath, theta_bar: SampledPath },
}

/// An admissible control of the affine class: feedback gains on the state
/// fluctuation and on the mean, plus a deterministic offset.
#[derive(Debug, Clone)]
pub struct ControlLaw {
    pub gains: Gains,
    pub offset: OffsetPath,
}

impl ControlLaw {
    pub fn zero(spec: &GameSpec) -> Self {
        Self { gains: Gains::Zero, offset: OffsetPath::zero(spec.control_dim()) }
    }

    /// The deterministic open-loop control `u(t) = v(t)`.
    pub fn open_loop(offset: OffsetPath) -> Self {
        Self { gains: Gains::Zero, offset }
    }

    pub fn feedback(law: Arc<FeedbackLaw>) -> Self {
        let dim = law.control_dim();
        Self { gains: Gains::Feedback(law), offset: OffsetPath::zero(dim) }
    }

    /// Same gains, offset shifted by `scale · source`.
    pub fn shifted(&self, scale: f64, source: VectorSource) -> Result<Self> {
        Ok(Self { gains: self.gains.clone(), offset: self.offset.clone().plus(scale, source)? })
    }

    pub fn check_dims(&self, spec: &GameSpec) -> Result<()> {
        let m = spec.control_dim();
        let ok_gain = match &self.gains {
            Gains::Zero => true,
            Gains::Feedback(f) => f.control_dim() == m && f.state_dim() == spec.n,
            Gains::Sampled { theta, theta_bar } => theta.shape() == (m, spec.n) && theta_bar.shape() == (m, spec.n),
        };
        if !ok_gain || self.offset.dim() != m {
            return Err(Error::InvalidArgument("control law dimensions do not match the game".into()));
        }
        Ok(())
    }

    /// `(Θ(t), Θ̄(t))`.
    pub fn gains_at(&self, spec: &GameSpec, t: f64, side: Side) -> Result<(Mat, Mat)> {
        match &self.gains {
            Gains::Zero => Ok((Mat::zeros(spec.control_dim(), spec.n), Mat::zeros(spec.control_dim(), spec.n))),
            Gains::Feedback(f) => f.gains_at(t, side),
            Gains::Sampled { theta, theta_bar } => Ok((theta.eval(t), theta_bar.eval(t))),
        }
    }

    /// Substeps the gains need on interval `k` of `grid` (those of the
    /// underlying Riccati solutions for a feedback law).
    pub(crate) fn substep_hint(&self, grid: &TimeGrid, k: usize) -> usize {
        match &self.gains {
            Gains::Feedback(f) if f.grid == *grid => f.substeps(k),
            _ => 1,
        }
    }
}

/// Embeds a player's `mᵢ × 1` path into the stacked control space.
pub fn embed_player_path(spec: &GameSpec, player: Player, path: &CoefficientPath) -> Result<VectorSource> {
    let dim = spec.player_dim(player);
    if path.shape() != (dim, 1) {
        return Err(Error::InvalidArgument(format!("direction for player {player} must be {dim}×1")));
    }
    let off = spec.player_offset(player);
    let m = spec.control_dim();
    Ok(VectorSource::Path(path.map_linear(|v| {
        let mut full = Mat::zeros(m, 1);
        full.view_mut((off, 0), (dim, 1)).copy_from(v);
        full
    })))
}
