//! Density-based conformal sets.
//!
//! With the negative log-density as score, the conformal set at threshold `q`
//! is the level set `{y : Σ w_j log y_j >= t_*}` with `w_j = φ μ_j − 1` and
//! `t_* = −q − log Γ(φ) + Σ log Γ(φ μ_j)`. When every `w_j > 0` the set is
//! convex and its smallest enclosing coordinate-floor polytope
//! `{y : y_i >= τ_i}` follows from a one-dimensional root in the KKT
//! multiplier `ρ`. The grid method sweeps a lattice inside that polytope and
//! keeps the points that satisfy the level constraint.

use crate::dirichlet::{log_density_parts, log_normalizer, CompositionalVector, MeanPrecision};
use crate::error::{Error, Result};
use crate::numerics::{find_root, Bracket};

/// Lower bound applied to grid coordinates that land on a face.
pub const GRID_NUDGE: f64 = 1e-12;
const BRACKET_EXPANSIONS: usize = 30;
const ROOT_TOL: f64 = 1e-13;

/// Negative log-density score.
pub fn nll_score(y: &CompositionalVector, mp: &MeanPrecision) -> Result<f64> {
    nll_score_parts(y.parts(), mp)
}

pub fn nll_score_parts(y: &[f64], mp: &MeanPrecision) -> Result<f64> {
    log_density_parts(y, mp).map(|v| -v)
}

/// Level-set form of the threshold `nll_score <= q`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelData {
    pub t_star: f64,
    pub w: Vec<f64>,
    pub w_total: f64,
    pub q: f64,
}

impl LevelData {
    /// `Σ w_j log y_j >= t_*` for an interior `y`.
    pub fn satisfied_by(&self, y: &[f64]) -> bool {
        if self.t_star == f64::NEG_INFINITY {
            return true;
        }
        level_value(&self.w, y) >= self.t_star
    }

    pub fn all_weights_positive(&self) -> bool {
        self.w.iter().all(|w| *w > 0.0)
    }
}

fn level_value(w: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(y).map(|(w, y)| w * y.ln()).sum()
}

pub fn level_threshold(mp: &MeanPrecision, q: f64) -> LevelData {
    let w: Vec<f64> = (0..mp.dim()).map(|j| mp.shape(j) - 1.0).collect();
    let w_total = w.iter().sum();
    let t_star = if q == f64::INFINITY { f64::NEG_INFINITY } else { -q - log_normalizer(mp) };
    LevelData { t_star, w, w_total, q }
}

/// `F_i(ρ) − t_*`, whose root in `ρ > 0` fixes the floor of face `i`.
pub fn floor_equation(rho: f64, w: &[f64], w_total: f64, t_star: f64, i: usize) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::domain(format!("floor equation needs rho > 0, got {rho}")));
    }
    if i >= w.len() {
        return Err(Error::domain(format!("face index {i} out of range")));
    }
    if let Some(bad) = w.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::domain(format!("floor equation needs positive weights, got {bad}")));
    }
    Ok(floor_residual(rho.ln(), w, w_total, t_star, i))
}

// Evaluated in u = ln ρ; `ln(1 + ρ)` via ln_1p / log-sum-exp to stay accurate at both ends.
fn floor_residual(u: f64, w: &[f64], w_total: f64, t_star: f64, i: usize) -> f64 {
    let wi = w[i];
    let rest = w_total - wi;
    let ln_1p_rho = if u > 0.0 { u + (-u).exp().ln_1p() } else { u.exp().ln_1p() };
    // w_i ρ + (W − w_i)(1 + ρ) = W ρ + (W − w_i)
    let ln_mix = if u > 0.0 { u + (w_total + rest * (-u).exp()).ln() } else { (w_total * u.exp() + rest).ln() };
    let entropy: f64 = w.iter().map(|v| v * v.ln()).sum();
    wi * u + rest * ln_1p_rho - w_total * ln_mix + entropy - t_star
}

/// How a floor was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloorStatus {
    Solved,
    /// Some `w_j <= 0`; the level set is not a convex interior set.
    NonPositiveWeight,
    /// No sign change within the expansion cap (the level set is empty or degenerate).
    BracketFailure,
    /// Infinite threshold: the region is the whole simplex.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorSolve {
    pub tau: f64,
    pub rho: Option<f64>,
    pub status: FloorStatus,
}

impl FloorSolve {
    fn fallback(status: FloorStatus) -> Self {
        FloorSolve { tau: 0.0, rho: None, status }
    }
}

/// Minimum of `y_i` over the level set, via the KKT closed form
/// `τ_i = θ w_i / (1 + ρ)`, `θ = (w_i/(1+ρ) + (W−w_i)/ρ)⁻¹`.
/// Falls back to `τ_i = 0` when weights are not all positive or no root is bracketed.
pub fn solve_floor(level: &LevelData, i: usize) -> FloorSolve {
    if level.t_star == f64::NEG_INFINITY {
        return FloorSolve::fallback(FloorStatus::Unbounded);
    }
    if !level.all_weights_positive() {
        return FloorSolve::fallback(FloorStatus::NonPositiveWeight);
    }
    let f = |u: f64| floor_residual(u, &level.w, level.w_total, level.t_star, i);
    let step = std::f64::consts::LN_10;
    let (mut lo, mut hi) = (-step, step);
    let mut expansions = 0;
    while f(lo) > 0.0 {
        if expansions == BRACKET_EXPANSIONS {
            return FloorSolve::fallback(FloorStatus::BracketFailure);
        }
        lo -= step;
        expansions += 1;
    }
    expansions = 0;
    while f(hi) < 0.0 {
        if expansions == BRACKET_EXPANSIONS {
            return FloorSolve::fallback(FloorStatus::BracketFailure);
        }
        hi += step;
        expansions += 1;
    }
    let Ok(u) = Bracket::new(lo, hi).and_then(|b| find_root(f, b, ROOT_TOL)) else {
        return FloorSolve::fallback(FloorStatus::BracketFailure);
    };
    let rho = u.exp();
    let wi = level.w[i];
    let theta = 1.0 / (wi / (1.0 + rho) + (level.w_total - wi) / rho);
    let tau = theta * wi / (1.0 + rho);
    if !(tau.is_finite() && (0.0..1.0).contains(&tau)) {
        return FloorSolve::fallback(FloorStatus::BracketFailure);
    }
    FloorSolve { tau, rho: Some(rho), status: FloorStatus::Solved }
}

/// `{y ∈ Δ : y_i >= τ_i}` together with the level data it encloses.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorPolytope {
    pub tau: Vec<f64>,
    pub level: LevelData,
    pub status: Vec<FloorStatus>,
}

impl FloorPolytope {
    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.tau.len() && y.iter().zip(&self.tau).all(|(v, t)| v >= t)
    }

    /// Marginal range `[τ_j, 1 − Σ_{t≠j} τ_t]` of each part.
    pub fn marginal_bounds(&self) -> Vec<(f64, f64)> {
        let total: f64 = self.tau.iter().sum();
        self.tau.iter().map(|t| (*t, 1.0 - (total - t))).collect()
    }

    pub fn any_fallback(&self) -> bool {
        self.status.iter().any(|s| *s != FloorStatus::Solved)
    }
}

pub fn floor_polytope_from_tau(tau: Vec<f64>, level: LevelData) -> FloorPolytope {
    let status = vec![FloorStatus::Solved; tau.len()];
    FloorPolytope { tau, level, status }
}

pub fn floor_polytope(mp: &MeanPrecision, q: f64) -> FloorPolytope {
    let level = level_threshold(mp, q);
    let solves: Vec<FloorSolve> = (0..mp.dim()).map(|i| solve_floor(&level, i)).collect();
    let mut tau: Vec<f64> = solves.iter().map(|s| s.tau).collect();
    let total: f64 = tau.iter().sum();
    debug_assert!(total < 1.0, "exact floors must leave a non-empty polytope, got Σ τ = {total}");
    if total >= 1.0 {
        let scale = (1.0 - 1e-12) / total;
        tau.iter_mut().for_each(|t| *t *= scale);
    }
    FloorPolytope { tau, level, status: solves.iter().map(|s| s.status).collect() }
}

/// Calls `visit` on every lattice point of the floor polytope with
/// `m` points along each axis (spacing `(1 − Σ τ) / (m − 1)`), nesting
/// `y_1` outermost. Coordinates below [`GRID_NUDGE`] are lifted onto it and
/// the excess is taken from the largest part.
pub fn for_each_grid_point<F: FnMut(&[f64])>(tau: &[f64], m: usize, mut visit: F) {
    assert!(m >= 2, "grid needs at least 2 points per axis");
    let d = tau.len();
    let slack = 1.0 - tau.iter().sum::<f64>();
    if d == 0 || slack < 0.0 {
        return;
    }
    let steps = m - 1;
    let h = slack / steps as f64;
    let mut counts = vec![0usize; d];
    let mut point = vec![0.0; d];
    // Odometer over compositions of `steps` into d non-negative parts.
    loop {
        let used: usize = counts[..d - 1].iter().sum();
        counts[d - 1] = steps - used;
        for j in 0..d - 1 {
            point[j] = tau[j] + counts[j] as f64 * h;
        }
        point[d - 1] = 1.0 - point[..d - 1].iter().sum::<f64>();
        nudge(&mut point);
        visit(&point);

        // Advance the innermost free coordinate that still has budget.
        let mut k = d - 1;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            let used_before: usize = counts[..k].iter().sum();
            if counts[k] + used_before < steps {
                counts[k] += 1;
                counts[k + 1..d - 1].iter_mut().for_each(|c| *c = 0);
                break;
            }
        }
    }
}

fn nudge(point: &mut [f64]) {
    let mut deficit = 0.0;
    for v in point.iter_mut() {
        if *v < GRID_NUDGE {
            deficit += GRID_NUDGE - *v;
            *v = GRID_NUDGE;
        }
    }
    if deficit > 0.0 {
        let (imax, _) = point
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty point");
        point[imax] -= deficit;
    }
}

/// All lattice points of the floor polytope.
pub fn interior_grid(floor: &FloorPolytope, m: usize) -> Vec<CompositionalVector> {
    let mut out = Vec::new();
    for_each_grid_point(&floor.tau, m, |p| {
        out.push(CompositionalVector::new(p.to_vec()).expect("grid points lie on the simplex"));
    });
    out
}

/// Grid points of a floor polytope that satisfy the exact level constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetGrid {
    pub accepted: Vec<CompositionalVector>,
    pub floor: FloorPolytope,
    pub points_per_axis: usize,
    pub level: LevelData,
}

impl LevelSetGrid {
    /// Range of each part over the accepted points (zero when none were accepted).
    pub fn widths(&self) -> Vec<f64> {
        let d = self.floor.tau.len();
        if self.accepted.is_empty() {
            return vec![0.0; d];
        }
        (0..d)
            .map(|j| {
                let (lo, hi) = self
                    .accepted
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[j]), hi.max(p[j])));
                hi - lo
            })
            .collect()
    }
}

fn filter_grid(floor: FloorPolytope, m: usize) -> LevelSetGrid {
    let level = floor.level.clone();
    let mut accepted = Vec::new();
    for_each_grid_point(&floor.tau, m, |p| {
        if level.satisfied_by(p) {
            accepted.push(CompositionalVector::new(p.to_vec()).expect("grid points lie on the simplex"));
        }
    });
    LevelSetGrid { accepted, floor, points_per_axis: m, level }
}

/// Grid refinement inside the floor polytope.
pub fn grid_region(mp: &MeanPrecision, q: f64, m: usize) -> LevelSetGrid {
    filter_grid(floor_polytope(mp, q), m)
}

/// Grid over the whole simplex, filtered by the same level constraint.
pub fn simplex_grid_region(mp: &MeanPrecision, q: f64, m: usize) -> LevelSetGrid {
    let level = level_threshold(mp, q);
    let d = mp.dim();
    let floor = FloorPolytope { tau: vec![0.0; d], level, status: vec![FloorStatus::Unbounded; d] };
    filter_grid(floor, m)
}
