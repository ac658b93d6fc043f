use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Every default the command line uses.
pub mod defaults {
    pub const GRID: u64 = 2000;
    pub const OUT: &str = "mflq-out";
    /// Upper bound for the default number of section blocks.
    pub const SECTION_BLOCKS: usize = 16;
    pub const SECTION_TOL: f64 = 1e-8;
    pub const EPS0: f64 = 0.5;
    pub const EPS_FACTOR: f64 = 0.5;
    pub const EPS_STEPS: usize = 14;
    pub const FAMILY_TOL: f64 = 1e-2;
    pub const SADDLE_TOL: f64 = 1e-6;
    pub const SEED: u64 = 1;
    /// Zero skips the Monte Carlo cross-check.
    pub const PATHS: usize = 0;
}

#[derive(Debug, Parser)]
#[command(name = "mflq", version, about = "Zero-sum mean-field LQ stochastic differential games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Riccati equations, synthesize the closed-loop saddle and report its value.
    Solve {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Check the convexity-concavity sign conditions on a finite operator section.
    Check {
        #[command(flatten)]
        game: GameArgs,
        /// Basis blocks per control coordinate; must divide the grid size
        /// (default: the largest divisor of the grid size up to 16).
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long, default_value_t = defaults::SECTION_TOL)]
        tol: f64,
    },
    /// Run the eps-perturbation family and classify open-loop solvability.
    Perturb {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, default_value_t = defaults::EPS0)]
        eps0: f64,
        #[arg(long, default_value_t = defaults::EPS_FACTOR)]
        eps_factor: f64,
        #[arg(long, default_value_t = defaults::EPS_STEPS)]
        eps_steps: usize,
        #[arg(long, default_value_t = defaults::FAMILY_TOL)]
        tol: f64,
    },
    /// Verify a candidate control (CSV) as a saddle point.
    Verify {
        #[command(flatten)]
        game: GameArgs,
        /// CSV with a `t` column and any of `Theta_i_j`, `ThetaBar_i_j`, `v_i`.
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long, default_value_t = defaults::SADDLE_TOL)]
        tol: f64,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Re-run a bundled worked example against its analytic solution.
    Reproduce {
        #[arg(value_parser = ["61", "52"])]
        id: String,
        #[arg(long, default_value_t = defaults::GRID, value_parser = clap::value_parser!(u64).range(10..))]
        grid: u64,
        #[arg(long, default_value = defaults::OUT)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Game specification (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled example instead of a config file.
    #[arg(long, value_parser = ["61", "52"])]
    pub example: Option<String>,
}

#[derive(Debug, Args)]
pub struct GameArgs {
    #[command(flatten)]
    pub source: Source,
    /// Number of grid intervals on [0, T].
    #[arg(long, default_value_t = defaults::GRID, value_parser = clap::value_parser!(u64).range(10..))]
    pub grid: u64,
    /// Initial state, comma separated (default: all ones).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Option<Vec<f64>>,
    /// Add eps·diag(I, −I) to the control weights before anything else.
    #[arg(long)]
    pub embed_eps: Option<f64>,
    #[arg(long, default_value = defaults::OUT)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, default_value_t = defaults::SEED)]
    pub seed: u64,
    /// Monte Carlo paths for the cross-check (0 disables it).
    #[arg(long, default_value_t = defaults::PATHS)]
    pub paths: usize,
}
