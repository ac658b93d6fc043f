use crate::error::{Error, Result};

/// Uniform partition `0 = t₀ < … < t_N = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("grid needs at least one step".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `N`; there are `N + 1` nodes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// The `k`-th node; the last node is `T` exactly.
    pub fn node(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            self.horizon * k as f64 / self.steps as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.node(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the interval `[t_k, t_{k+1})` containing `t` (the last
    /// interval is closed).
    pub fn interval_of(&self, t: f64) -> usize {
        let k = (t / self.step_size()).floor();
        if k < 0.0 {
            0
        } else {
            (k as usize).min(self.steps - 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_uniform_and_end_at_horizon() {
        let g = TimeGrid::new(1.0, 3).unwrap();
        let nodes = g.nodes();
        assert_eq!(nodes.len(), 4);
        assert_eq!(nodes[3], 1.0);
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        assert!((g.step_size() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }
}
