//! Split-conformal scaffolding and the quantile-residual box method.
//!
//! The box method scores a calibration point by the largest absolute
//! normal-scale quantile residual across components,
//! `S = max_j |Φ⁻¹(F_j(y_j))|`, where `F_j` is the Beta marginal CDF of the
//! fitted Dirichlet. Thresholding `S <= q` inverts componentwise into the
//! Beta quantiles at `Φ(−q)` and `Φ(q)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dirichlet::{marginal_beta, CompositionalVector, MeanPrecision};
use crate::error::{Error, Result};
use crate::hdr::{FloorPolytope, LevelSetGrid};
use crate::numerics::{beta_cdf, beta_quantile, normal_cdf, normal_quantile};

/// PIT values are clamped to `[ε, 1 − ε]` so every score is finite.
pub const PIT_EPS: f64 = 1e-12;

/// Disjoint train / calibration / test index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub calibration: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Uniformly random partition of `0..n`. The training or test fraction may be zero.
///
/// Block sizes are `round(n·f_train)` and `round(n·f_cal)`; the test block takes
/// the remainder.
pub fn split_data(n: usize, fractions: (f64, f64, f64), seed: u64) -> Result<SplitIndices> {
    let (f_train, f_cal, f_test) = fractions;
    let valid = [f_train, f_cal, f_test].iter().all(|f| f.is_finite() && *f >= 0.0)
        && f_cal > 0.0
        && (f_train + f_cal + f_test - 1.0).abs() < 1e-9;
    if !valid {
        return Err(Error::Config(format!("invalid split fractions {fractions:?}")));
    }
    let n_train = (n as f64 * f_train).round() as usize;
    let n_cal = ((n as f64 * f_cal).round() as usize).min(n.saturating_sub(n_train));
    let n_test = n - n_train - n_cal;
    if (f_train > 0.0 && n_train == 0) || n_cal == 0 || (f_test > 0.0 && n_test == 0) {
        return Err(Error::Config(format!("n = {n} is too small for split {fractions:?}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train + n_cal);
    let calibration = idx.split_off(n_train);
    Ok(SplitIndices { train: idx, calibration, test, seed })
}

/// The `k`-th smallest calibration score, `k = ⌈(1 − α)(n_cal + 1)⌉`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalQuantile {
    /// `+inf` when `k > n_cal`.
    pub value: f64,
    pub k: usize,
    pub n_cal: usize,
    pub alpha: f64,
}

impl ConformalQuantile {
    /// True when the region degenerates to the whole simplex.
    pub fn is_unbounded(&self) -> bool {
        self.value.is_infinite()
    }
}

/// Conformal order index `⌈(1 − α)(n + 1)⌉`.
pub fn conformal_rank(n_cal: usize, alpha: f64) -> usize {
    // The small offset keeps exact products such as 0.9·10 from rounding up.
    ((1.0 - alpha) * (n_cal as f64 + 1.0) - 1e-9).ceil().max(1.0) as usize
}

pub fn conformal_quantile(scores: &[f64], alpha: f64) -> Result<ConformalQuantile> {
    if scores.is_empty() {
        return Err(Error::Config("no calibration scores".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::domain("calibration scores must be finite"));
    }
    let n_cal = scores.len();
    let k = conformal_rank(n_cal, alpha);
    let value = if k > n_cal {
        f64::INFINITY
    } else {
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted[k - 1]
    };
    Ok(ConformalQuantile { value, k, n_cal, alpha })
}

/// Marginal Beta CDF of each part, clamped to `[ε, 1 − ε]`.
pub fn pit_values(y: &CompositionalVector, mp: &MeanPrecision) -> Result<Vec<f64>> {
    if y.dim() != mp.dim() {
        return Err(Error::Dimension { expected: mp.dim(), got: y.dim() });
    }
    (0..y.dim())
        .map(|j| {
            let (a, b) = marginal_beta(mp, j)?;
            Ok(beta_cdf(y[j], a, b)?.clamp(PIT_EPS, 1.0 - PIT_EPS))
        })
        .collect()
}

/// Max-type quantile-residual score.
pub fn qr_score(y: &CompositionalVector, mp: &MeanPrecision) -> Result<f64> {
    let mut score: f64 = 0.0;
    for u in pit_values(y, mp)? {
        score = score.max(normal_quantile(u)?.abs());
    }
    Ok(score)
}

/// Per-component closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub intervals: Vec<(f64, f64)>,
}

impl BoxRegion {
    pub fn whole(parts: usize) -> Self {
        BoxRegion { intervals: vec![(0.0, 1.0); parts] }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.intervals.len() && y.iter().zip(&self.intervals).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Componentwise membership indicators.
    pub fn component_hits(&self, y: &[f64]) -> Vec<bool> {
        y.iter().zip(&self.intervals).map(|(v, (lo, hi))| lo <= v && v <= hi).collect()
    }
}

/// Inverts `S(x, y) <= q` into marginal Beta quantile intervals.
pub fn qr_region(mp: &MeanPrecision, q: &ConformalQuantile) -> Result<BoxRegion> {
    qr_region_at(mp, q.value)
}

pub fn qr_region_at(mp: &MeanPrecision, q: f64) -> Result<BoxRegion> {
    if q.is_infinite() {
        return Ok(BoxRegion::whole(mp.dim()));
    }
    if !(q >= 0.0) {
        return Err(Error::domain(format!("score threshold must be non-negative, got {q}")));
    }
    let p_inf = normal_cdf(-q);
    let p_sup = normal_cdf(q);
    let intervals = (0..mp.dim())
        .map(|j| {
            let (a, b) = marginal_beta(mp, j)?;
            Ok((beta_quantile(p_inf, a, b)?, beta_quantile(p_sup, a, b)?))
        })
        .collect::<Result<_>>()?;
    Ok(BoxRegion { intervals })
}

/// A conformal prediction set on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictionRegion {
    Box(BoxRegion),
    FloorPolytope(FloorPolytope),
    LevelSetGrid(LevelSetGrid),
}

impl PredictionRegion {
    pub fn dim(&self) -> usize {
        match self {
            PredictionRegion::Box(b) => b.intervals.len(),
            PredictionRegion::FloorPolytope(f) => f.tau.len(),
            PredictionRegion::LevelSetGrid(g) => g.floor.tau.len(),
        }
    }
}

/// Membership of `y` in the region the method asserts. For the grid method
/// this is the exact level-set constraint, not grid membership.
pub fn region_contains(region: &PredictionRegion, y: &CompositionalVector) -> bool {
    if y.dim() != region.dim() {
        return false;
    }
    match region {
        PredictionRegion::Box(b) => b.contains(y.parts()),
        PredictionRegion::FloorPolytope(f) => f.contains(y.parts()),
        PredictionRegion::LevelSetGrid(g) => g.level.satisfied_by(y.parts()),
    }
}

/// Per-component width of the region.
pub fn region_widths(region: &PredictionRegion) -> Vec<f64> {
    match region {
        PredictionRegion::Box(b) => b.intervals.iter().map(|(lo, hi)| hi - lo).collect(),
        PredictionRegion::FloorPolytope(f) => {
            let slack = 1.0 - f.tau.iter().sum::<f64>();
            vec![slack; f.tau.len()]
        }
        PredictionRegion::LevelSetGrid(g) => g.widths(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdr::{floor_polytope_from_tau, level_threshold};

    #[test]
    fn split_sizes() {
        let s = split_data(10, (0.7, 0.3, 0.0), 3).unwrap();
        assert_eq!((s.train.len(), s.calibration.len(), s.test.len()), (7, 3, 0));
        assert_eq!(s, split_data(10, (0.7, 0.3, 0.0), 3).unwrap());
        let s = split_data(1729, (0.7, 0.2, 0.1), 1).unwrap();
        assert_eq!((s.train.len(), s.calibration.len(), s.test.len()), (1210, 346, 173));
        let mut all: Vec<usize> = s.train.iter().chain(&s.calibration).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1729).collect::<Vec<_>>());
        assert!(split_data(1, (0.7, 0.2, 0.1), 1).is_err());
        assert!(split_data(100, (0.7, 0.2, 0.2), 1).is_err());
    }

    #[test]
    fn quantile_order_statistics() {
        let s: Vec<f64> = (1..=9).map(f64::from).collect();
        let q = conformal_quantile(&s, 0.1).unwrap();
        assert_eq!((q.k, q.value), (9, 9.0));
        let s: Vec<f64> = (1..=19).map(f64::from).collect();
        let q = conformal_quantile(&s, 0.1).unwrap();
        assert_eq!((q.k, q.value), (18, 18.0));
        let q = conformal_quantile(&[4.0, 2.0, 3.0, 1.0], 0.1).unwrap();
        assert_eq!(q.k, 5);
        assert!(q.is_unbounded());
        assert!(conformal_quantile(&[], 0.1).is_err());
        assert!(conformal_quantile(&[1.0], 1.0).is_err());
    }

    #[test]
    fn pit_on_uniform_marginals_is_identity() {
        let mp = MeanPrecision::new(vec![0.5, 0.5], 2.0).unwrap();
        let y = CompositionalVector::new(vec![0.27, 0.73]).unwrap();
        let u = pit_values(&y, &mp).unwrap();
        assert!((u[0] - 0.27).abs() < 1e-14 && (u[1] - 0.73).abs() < 1e-14);
    }

    #[test]
    fn score_clamps_extremes() {
        let mp = MeanPrecision::new(vec![0.5, 0.5], 2.0).unwrap();
        let y = CompositionalVector::new(vec![1.0 - 1e-15, 1e-15]).unwrap();
        let s = qr_score(&y, &mp).unwrap();
        assert!((s - normal_quantile(1.0 - PIT_EPS).unwrap()).abs() < 1e-9);
        assert!((s - 7.03).abs() < 0.01);
    }

    #[test]
    fn region_special_cases() {
        let mp = MeanPrecision::new(vec![0.5, 0.5], 2.0).unwrap();
        let b = qr_region_at(&mp, normal_quantile(0.95).unwrap()).unwrap();
        for (lo, hi) in &b.intervals {
            assert!((lo - 0.05).abs() < 1e-10 && (hi - 0.95).abs() < 1e-10);
        }
        let mp3 = MeanPrecision::new(vec![0.2, 0.3, 0.5], 10.0).unwrap();
        let b = qr_region_at(&mp3, 0.0).unwrap();
        for (j, (lo, hi)) in b.intervals.iter().enumerate() {
            let (a, bb) = marginal_beta(&mp3, j).unwrap();
            assert!((lo - hi).abs() < 1e-12);
            assert!((beta_cdf(*lo, a, bb).unwrap() - 0.5).abs() < 1e-10);
        }
        let whole = qr_region_at(&mp3, f64::INFINITY).unwrap();
        let y = CompositionalVector::new(vec![0.98, 0.01, 0.01]).unwrap();
        assert!(region_contains(&PredictionRegion::Box(whole), &y));
        assert!(!region_contains(&PredictionRegion::Box(b), &y));
    }

    #[test]
    fn widths_by_region_kind() {
        let b = BoxRegion { intervals: vec![(0.1, 0.5); 3] };
        for w in region_widths(&PredictionRegion::Box(b)) {
            assert!((w - 0.4).abs() < 1e-15);
        }
        let mp = MeanPrecision::new(vec![0.2, 0.3, 0.5], 10.0).unwrap();
        let level = level_threshold(&mp, 1.0);
        let f = floor_polytope_from_tau(vec![0.1, 0.2, 0.3], level.clone());
        for w in region_widths(&PredictionRegion::FloorPolytope(f)) {
            assert!((w - 0.4).abs() < 1e-15);
        }
        let zero = floor_polytope_from_tau(vec![0.0; 3], level);
        let y = CompositionalVector::new(vec![0.98, 0.01, 0.01]).unwrap();
        assert!(region_contains(&PredictionRegion::FloorPolytope(zero), &y));
    }
}
