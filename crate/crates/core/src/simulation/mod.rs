//! Simulation scenarios and the Monte Carlo coverage/width/runtime harness.

mod harness;
mod scenario;

pub use harness::{
    compare_hdr_vs_full, full_simplex_grid, iteration_rng, run_monte_carlo, McOptions, FAILURE_TOLERANCE,
};
pub use scenario::{draw_observation, generate_scenario, generate_with_truth, CovariateLaw, ScenarioSpec};
