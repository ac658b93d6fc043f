//! Fixtures shared by the benchmarks.

use mflq::examples::example_6_1;
use mflq::instances::random_convex_concave;
use mflq::model::embed_perturbation;
use mflq::{GameSpec, TimeGrid};

/// The unbounded scalar example regularized at `eps`.
pub fn regularized_example(eps: f64) -> GameSpec {
    embed_perturbation(&example_6_1(), eps).expect("positive eps")
}

/// A three-dimensional convex-concave instance.
pub fn coupled_game() -> GameSpec {
    (0..)
        .map(random_convex_concave)
        .find(|s| s.n == 3 && s.control_dim() == 4)
        .expect("generator covers every shape")
}

pub fn unit_grid(steps: usize) -> TimeGrid {
    TimeGrid::new(1.0, steps).expect("positive steps")
}
