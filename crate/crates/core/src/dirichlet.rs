//! Dirichlet law on the open simplex in shape (λ) and mean-precision (μ, φ) form.
//!
//! The two forms are related by `λ_j = φ μ_j` and `φ = Σ λ_j`. Every one-dimensional
//! marginal is `Beta(λ_j, λ_0 − λ_j)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::log_gamma;

const SUM_TOL: f64 = 1e-9;
const SAMPLE_RETRIES: usize = 16;
const SAMPLE_FLOOR: f64 = 1e-300;

/// A point on the open simplex: `D >= 2` positive parts summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionalVector(Vec<f64>);

impl CompositionalVector {
    pub fn new(parts: Vec<f64>) -> Result<Self> {
        if parts.len() < 2 {
            return Err(Error::domain(format!("composition needs at least 2 parts, got {}", parts.len())));
        }
        if let Some(bad) = parts.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::domain(format!("composition parts must be positive, got {bad}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::domain(format!("composition parts sum to {sum}, not 1")));
        }
        Ok(CompositionalVector(parts))
    }

    /// Divides positive parts by their total.
    pub fn normalized(mut parts: Vec<f64>) -> Result<Self> {
        let sum: f64 = parts.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::domain("cannot normalize a composition with non-positive total"));
        }
        parts.iter_mut().for_each(|p| *p /= sum);
        Self::new(parts)
    }

    pub fn parts(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Reorders the parts so that part `i` of the result is part `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        CompositionalVector(perm.iter().map(|&i| self.0[i]).collect())
    }
}

impl std::ops::Index<usize> for CompositionalVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Shape parameters λ with the cached total λ_0.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeParams {
    lambda: Vec<f64>,
    lambda0: f64,
}

impl ShapeParams {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.len() < 2 {
            return Err(Error::domain("Dirichlet needs at least 2 components"));
        }
        if let Some(bad) = lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::domain(format!("shape parameters must be positive, got {bad}")));
        }
        let lambda0 = lambda.iter().sum();
        Ok(ShapeParams { lambda, lambda0 })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }
}

/// Mean vector μ (on the simplex) and precision φ.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPrecision {
    mu: Vec<f64>,
    phi: f64,
}

impl MeanPrecision {
    pub fn new(mu: Vec<f64>, phi: f64) -> Result<Self> {
        if mu.len() < 2 {
            return Err(Error::domain("Dirichlet needs at least 2 components"));
        }
        if let Some(bad) = mu.iter().find(|m| !(m.is_finite() && **m > 0.0 && **m < 1.0)) {
            return Err(Error::domain(format!("means must lie in (0,1), got {bad}")));
        }
        let sum: f64 = mu.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::domain(format!("means sum to {sum}, not 1")));
        }
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::domain(format!("precision must be positive, got {phi}")));
        }
        Ok(MeanPrecision { mu, phi })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Shape parameter `λ_j = φ μ_j`.
    pub fn shape(&self, j: usize) -> f64 {
        self.phi * self.mu[j]
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        MeanPrecision { mu: perm.iter().map(|&i| self.mu[i]).collect(), phi: self.phi }
    }
}

pub fn to_shape(mp: &MeanPrecision) -> ShapeParams {
    let lambda = mp.mu.iter().map(|m| m * mp.phi).collect();
    ShapeParams { lambda, lambda0: mp.phi }
}

pub fn to_mean_precision(sp: &ShapeParams) -> MeanPrecision {
    let mu = sp.lambda.iter().map(|l| l / sp.lambda0).collect();
    MeanPrecision { mu, phi: sp.lambda0 }
}

/// Log of the normalising constant `ln Γ(φ) − Σ ln Γ(φ μ_j)`.
pub(crate) fn log_normalizer(mp: &MeanPrecision) -> f64 {
    let mut acc = log_gamma(mp.phi).expect("phi validated positive");
    for j in 0..mp.dim() {
        acc -= log_gamma(mp.shape(j)).expect("shape validated positive");
    }
    acc
}

/// Log density at the parts of `y`. Any non-positive part is a domain error.
pub fn log_density_parts(y: &[f64], mp: &MeanPrecision) -> Result<f64> {
    if y.len() != mp.dim() {
        return Err(Error::Dimension { expected: mp.dim(), got: y.len() });
    }
    if let Some(bad) = y.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::domain(format!(
            "log_density requires an interior point, got part {bad}; clamp before scoring"
        )));
    }
    let kernel: f64 = y.iter().enumerate().map(|(j, v)| (mp.shape(j) - 1.0) * v.ln()).sum();
    Ok(log_normalizer(mp) + kernel)
}

pub fn log_density(y: &CompositionalVector, mp: &MeanPrecision) -> Result<f64> {
    log_density_parts(y.parts(), mp)
}

/// Mean and variance of component `j`.
pub fn component_moments(mp: &MeanPrecision, j: usize) -> Result<(f64, f64)> {
    check_index(mp, j)?;
    let m = mp.mu[j];
    Ok((m, m * (1.0 - m) / (mp.phi + 1.0)))
}

/// Shape parameters `(a, b)` of the Beta marginal of component `j`.
pub fn marginal_beta(mp: &MeanPrecision, j: usize) -> Result<(f64, f64)> {
    check_index(mp, j)?;
    Ok((mp.phi * mp.mu[j], mp.phi * (1.0 - mp.mu[j])))
}

fn check_index(mp: &MeanPrecision, j: usize) -> Result<()> {
    if j >= mp.dim() {
        return Err(Error::domain(format!("component index {j} out of range for D = {}", mp.dim())));
    }
    Ok(())
}

/// Gamma(shape, 1) variate, Marsaglia–Tsang squeeze; shapes below one are
/// boosted via `G(k) = G(k + 1) U^{1/k}`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.random();
        return sample_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x: f64 = rng.sample(StandardNormal);
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One Dirichlet draw by normalising independent Gamma variates.
pub fn sample<R: Rng + ?Sized>(mp: &MeanPrecision, rng: &mut R) -> CompositionalVector {
    let d = mp.dim();
    let mut draws = vec![0.0; d];
    for _ in 0..SAMPLE_RETRIES {
        for (j, g) in draws.iter_mut().enumerate() {
            *g = sample_gamma(mp.shape(j), rng);
        }
        let total: f64 = draws.iter().sum();
        if draws.iter().all(|g| *g / total > 0.0) {
            return CompositionalVector(draws.iter().map(|g| g / total).collect());
        }
    }
    // Persistent underflow for tiny shapes.
    let total: f64 = draws.iter().sum::<f64>().max(SAMPLE_FLOOR);
    let mut parts: Vec<f64> = draws.iter().map(|g| (g / total).max(SAMPLE_FLOOR)).collect();
    let sum: f64 = parts.iter().sum();
    parts.iter_mut().for_each(|p| *p /= sum);
    CompositionalVector(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mp(mu: &[f64], phi: f64) -> MeanPrecision {
        MeanPrecision::new(mu.to_vec(), phi).unwrap()
    }

    #[test]
    fn parameterisation_roundtrip() {
        let sp = to_shape(&mp(&[0.5, 0.5], 2.0));
        assert_eq!(sp.lambda(), &[1.0, 1.0]);
        let sp = to_shape(&mp(&[0.2, 0.3, 0.5], 10.0));
        for (got, want) in sp.lambda().iter().zip([2.0, 3.0, 5.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let back = to_mean_precision(&ShapeParams::new(vec![7.0; 4]).unwrap());
        assert_eq!(back.mu(), &[0.25; 4]);
        assert_eq!(back.phi(), 28.0);
        let back = to_mean_precision(&ShapeParams::new(vec![2.0, 3.0, 5.0]).unwrap());
        assert!((back.mu()[0] - 0.2).abs() < 1e-12 && back.phi() == 10.0);
    }

    #[test]
    fn density_examples() {
        let uniform = mp(&[0.5, 0.5], 2.0);
        let y = CompositionalVector::new(vec![0.17, 0.83]).unwrap();
        assert!(log_density(&y, &uniform).unwrap().abs() < 1e-14);

        let sym = to_mean_precision(&ShapeParams::new(vec![2.0; 3]).unwrap());
        let centroid = CompositionalVector::new(vec![1.0 / 3.0; 3]).unwrap();
        let want = (120.0f64 / 27.0).ln();
        assert!((log_density(&centroid, &sym).unwrap() - want).abs() < 1e-12);
        assert!((want - 1.491_655).abs() < 1e-6);
    }

    #[test]
    fn density_rejects_boundary_and_mismatch() {
        let m = mp(&[0.2, 0.3, 0.5], 10.0);
        assert!(matches!(log_density_parts(&[0.0, 0.5, 0.5], &m), Err(Error::Domain(_))));
        assert!(matches!(log_density_parts(&[0.5, 0.5], &m), Err(Error::Dimension { .. })));
    }

    #[test]
    fn moments_and_marginals() {
        assert_eq!(component_moments(&mp(&[0.5, 0.5], 1.0), 0).unwrap(), (0.5, 0.125));
        let mut last = f64::INFINITY;
        for phi in [1.0, 10.0, 100.0, 1e4, 1e8] {
            let v = component_moments(&mp(&[0.5, 0.5], phi), 1).unwrap().1;
            assert!(v < last);
            last = v;
        }
        let m = mp(&[0.2, 0.3, 0.5], 10.0);
        let (a, b) = marginal_beta(&m, 0).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (b - 8.0).abs() < 1e-12);
        assert!(marginal_beta(&m, 3).is_err());
        let sym = mp(&[0.25; 4], 12.0);
        let (a, b) = marginal_beta(&sym, 2).unwrap();
        assert!((a - b * 0.25 / 0.75).abs() < 1e-12);
    }

    #[test]
    fn composition_validation() {
        assert!(CompositionalVector::new(vec![1.0]).is_err());
        assert!(CompositionalVector::new(vec![0.0, 1.0]).is_err());
        assert!(CompositionalVector::new(vec![0.3, 0.3]).is_err());
        let c = CompositionalVector::normalized(vec![0.2, 0.3, 0.4]).unwrap();
        assert!((c[0] - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic_and_valid() {
        let m = mp(&[0.2, 0.3, 0.5], 0.3);
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let a = sample(&m, &mut r1);
            assert_eq!(a, sample(&m, &mut r2));
            assert!(a.parts().iter().all(|p| *p > 0.0));
            assert!((a.parts().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
