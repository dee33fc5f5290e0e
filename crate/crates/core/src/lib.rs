//! Dirichlet regression with split-conformal prediction regions on the simplex.
//!
//! Three region constructions share one split-conformal scaffold:
//!
//! - quantile-residual boxes ([`conformal::qr_region`]),
//! - coordinate-floor polytopes enclosing the highest-density level set
//!   ([`hdr::floor_polytope`]),
//! - lattice refinement of that polytope filtered by the exact level
//!   constraint ([`hdr::grid_region`]).

pub mod application;
pub mod conformal;
pub mod dirichlet;
pub mod error;
pub mod hdr;
pub mod io;
pub mod numerics;
pub mod optim;
pub mod plot;
pub mod parallel;
pub mod pipeline;
pub mod regression;
pub mod simulation;

pub use conformal::{
    conformal_quantile, pit_values, qr_region, qr_score, region_contains, region_widths, split_data, BoxRegion,
    ConformalQuantile, PredictionRegion, SplitIndices,
};
pub use dirichlet::{CompositionalVector, MeanPrecision, ShapeParams};
pub use error::{Convergence, Error, Result};
pub use hdr::{floor_polytope, grid_region, level_threshold, nll_score, FloorPolytope, LevelData, LevelSetGrid};
pub use regression::{fit_mle, predict_params, Coefficients, DesignRow, FitConfig, FittedModel, Observation};
pub use pipeline::{EvalSummary, Method, MethodSettings};
pub use simulation::{run_monte_carlo, McOptions, ScenarioSpec};
