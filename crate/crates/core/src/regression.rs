//! Logistic Dirichlet regression.
//!
//! Component 1 is the reference category: its logit is fixed at zero and
//! `log(μ_j / μ_1) = ⟨x, β_j⟩` for `j >= 2`. The precision uses a log link,
//! `log φ = ⟨d, γ⟩`. Coefficients are estimated by maximum likelihood with BFGS.

use serde::{Deserialize, Serialize};

use crate::dirichlet::{log_density_parts, CompositionalVector, MeanPrecision};
use crate::error::{Convergence, Error, Result};
use crate::numerics::{digamma, log_gamma};
use crate::optim::{self, BfgsConfig};

const MAX_LOG_PRECISION: f64 = 700.0;

/// Covariates for one observation; the leading entry of each vector is the intercept `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRow {
    pub mean_covariates: Vec<f64>,
    pub precision_covariates: Vec<f64>,
}

impl DesignRow {
    pub fn new(mean_covariates: Vec<f64>, precision_covariates: Vec<f64>) -> Result<Self> {
        for v in [&mean_covariates, &precision_covariates] {
            if v.first() != Some(&1.0) {
                return Err(Error::domain("design vectors must start with the intercept 1"));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::domain("design vectors must be finite"));
            }
        }
        Ok(DesignRow { mean_covariates, precision_covariates })
    }

    /// Intercept followed by `covariates`, shared by the mean and precision predictors.
    pub fn shared(covariates: &[f64]) -> Self {
        let mut v = Vec::with_capacity(covariates.len() + 1);
        v.push(1.0);
        v.extend_from_slice(covariates);
        DesignRow { mean_covariates: v.clone(), precision_covariates: v }
    }
}

/// One (covariates, response) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub row: DesignRow,
    pub y: CompositionalVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    /// `(D − 1) × p`; row `k` holds `β_{k+2}`.
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
}

impl Coefficients {
    pub fn zeros(parts: usize, p: usize, p_phi: usize) -> Self {
        Coefficients { beta: vec![vec![0.0; p]; parts - 1], gamma: vec![0.0; p_phi] }
    }

    pub fn parts(&self) -> usize {
        self.beta.len() + 1
    }

    pub fn mean_len(&self) -> usize {
        self.beta.first().map_or(0, Vec::len)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.beta.iter().flatten().chain(&self.gamma).copied().collect()
    }

    pub fn from_flat(flat: &[f64], parts: usize, p: usize, p_phi: usize) -> Result<Self> {
        let expected = (parts - 1) * p + p_phi;
        if flat.len() != expected {
            return Err(Error::Dimension { expected, got: flat.len() });
        }
        let beta = flat[..(parts - 1) * p].chunks(p).map(<[f64]>::to_vec).collect();
        Ok(Coefficients { beta, gamma: flat[(parts - 1) * p..].to_vec() })
    }

    fn check_row(&self, row: &DesignRow) -> Result<()> {
        if row.mean_covariates.len() != self.mean_len() {
            return Err(Error::Dimension { expected: self.mean_len(), got: row.mean_covariates.len() });
        }
        if row.precision_covariates.len() != self.gamma.len() {
            return Err(Error::Dimension { expected: self.gamma.len(), got: row.precision_covariates.len() });
        }
        Ok(())
    }
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn logits(row: &DesignRow, coeffs: &Coefficients) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(coeffs.beta.iter().map(|b| dot(&row.mean_covariates, b)))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean-precision parameters implied by one design row.
pub fn linear_predictors(row: &DesignRow, coeffs: &Coefficients) -> Result<MeanPrecision> {
    coeffs.check_row(row)?;
    let log_phi = dot(&row.precision_covariates, &coeffs.gamma);
    if !(log_phi.abs() <= MAX_LOG_PRECISION) {
        return Err(Error::Overflow(format!("log precision {log_phi} outside [-700, 700]")));
    }
    MeanPrecision::new(softmax(&logits(row, coeffs)), log_phi.exp())
}

/// `−Σ_i log f(y_i | x_i)`.
pub fn negative_log_likelihood(data: &[Observation], coeffs: &Coefficients) -> Result<f64> {
    let mut total = 0.0;
    for obs in data {
        let mp = linear_predictors(&obs.row, coeffs)?;
        total -= log_density_parts(obs.y.parts(), &mp)?;
    }
    Ok(total)
}

/// Negative log-likelihood together with its gradient in the layout of
/// [`Coefficients::flatten`].
pub fn nll_and_gradient(data: &[Observation], coeffs: &Coefficients) -> Result<(f64, Vec<f64>)> {
    let parts = coeffs.parts();
    let p = coeffs.mean_len();
    let p_phi = coeffs.gamma.len();
    let mut grad = vec![0.0; (parts - 1) * p + p_phi];
    let mut total = 0.0;
    let mut score = vec![0.0; parts];
    for obs in data {
        if obs.y.dim() != parts {
            return Err(Error::Dimension { expected: parts, got: obs.y.dim() });
        }
        let mp = linear_predictors(&obs.row, coeffs)?;
        let phi = mp.phi();
        let mu = mp.mu();
        let y = obs.y.parts();

        let mut ll = log_gamma(phi)?;
        let mut dphi = digamma(phi)?;
        for j in 0..parts {
            let lam = phi * mu[j];
            let ln_y = y[j].ln();
            let psi = digamma(lam)?;
            ll += -log_gamma(lam)? + (lam - 1.0) * ln_y;
            score[j] = ln_y - psi;
            dphi += mu[j] * score[j];
        }
        total -= ll;

        // dℓ/dη_k = φ μ_k (g_k − Σ_j μ_j g_j)
        let centre: f64 = mu.iter().zip(&score).map(|(m, g)| m * g).sum();
        for k in 1..parts {
            let d_eta = phi * mu[k] * (score[k] - centre);
            let offset = (k - 1) * p;
            for (l, x) in obs.row.mean_covariates.iter().enumerate() {
                grad[offset + l] -= d_eta * x;
            }
        }
        let offset = (parts - 1) * p;
        for (l, d) in obs.row.precision_covariates.iter().enumerate() {
            grad[offset + l] -= dphi * phi * d;
        }
    }
    Ok((total, grad))
}

pub fn nll_gradient(data: &[Observation], coeffs: &Coefficients) -> Result<Vec<f64>> {
    nll_and_gradient(data, coeffs).map(|(_, g)| g)
}

/// Per-covariate affine maps `(x − mean) / scale` for the non-intercept
/// entries of each design vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean_covariates: Vec<(f64, f64)>,
    pub precision_covariates: Vec<(f64, f64)>,
}

impl Standardization {
    pub fn apply(&self, row: &DesignRow) -> Result<DesignRow> {
        Ok(DesignRow {
            mean_covariates: apply_affine(&row.mean_covariates, &self.mean_covariates)?,
            precision_covariates: apply_affine(&row.precision_covariates, &self.precision_covariates)?,
        })
    }
}

fn apply_affine(v: &[f64], maps: &[(f64, f64)]) -> Result<Vec<f64>> {
    if v.len() != maps.len() + 1 {
        return Err(Error::Dimension { expected: maps.len() + 1, got: v.len() });
    }
    Ok(std::iter::once(v[0]).chain(v[1..].iter().zip(maps).map(|(x, (m, s))| (x - m) / s)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub coefficients: Coefficients,
    pub parts: usize,
    pub convergence: Convergence,
    pub standardization: Option<Standardization>,
}

impl FittedModel {
    /// Parameters for a row already on the model's (standardised) scale.
    pub fn predict_standardized(&self, row: &DesignRow) -> Result<MeanPrecision> {
        linear_predictors(row, &self.coefficients)
    }
}

/// Parameters for a raw design row; stored standardisation is applied first.
pub fn predict_params(model: &FittedModel, row: &DesignRow) -> Result<MeanPrecision> {
    match &model.standardization {
        Some(s) => linear_predictors(&s.apply(row)?, &model.coefficients),
        None => linear_predictors(row, &model.coefficients),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitConfig {
    pub optimizer: BfgsConfig,
}

/// Data-driven starting point: intercept logits from component sample means,
/// log precision from a method-of-moments estimate, all slopes zero.
pub fn initial_coefficients(train: &[Observation]) -> Coefficients {
    let parts = train[0].y.dim();
    let p = train[0].row.mean_covariates.len();
    let p_phi = train[0].row.precision_covariates.len();
    let n = train.len() as f64;
    let mut means = vec![0.0; parts];
    for obs in train {
        means.iter_mut().zip(obs.y.parts()).for_each(|(m, y)| *m += y / n);
    }
    let mut vars = vec![0.0; parts];
    for obs in train {
        vars.iter_mut()
            .zip(obs.y.parts().iter().zip(&means))
            .for_each(|(v, (y, m))| *v += (y - m).powi(2) / (n - 1.0).max(1.0));
    }
    let mut phis: Vec<f64> = means
        .iter()
        .zip(&vars)
        .map(|(m, v)| m * (1.0 - m) / v - 1.0)
        .filter(|x| x.is_finite())
        .collect();
    phis.sort_by(f64::total_cmp);
    let phi0 = match phis.len() {
        0 => 1.0,
        k if k % 2 == 1 => phis[k / 2],
        k => 0.5 * (phis[k / 2 - 1] + phis[k / 2]),
    };
    let phi0 = if phi0.is_finite() && phi0 > 0.0 { phi0 } else { 1.0 };

    let mut coeffs = Coefficients::zeros(parts, p, p_phi);
    for k in 1..parts {
        coeffs.beta[k - 1][0] = (means[k] / means[0]).ln();
    }
    coeffs.gamma[0] = phi0.ln();
    coeffs
}

/// Maximum-likelihood fit by BFGS from [`initial_coefficients`].
pub fn fit_mle(train: &[Observation], config: &FitConfig) -> Result<FittedModel> {
    let first = train.first().ok_or_else(|| Error::Config("empty training set".into()))?;
    let parts = first.y.dim();
    let p = first.row.mean_covariates.len();
    let p_phi = first.row.precision_covariates.len();
    for obs in train {
        if obs.y.dim() != parts {
            return Err(Error::Dimension { expected: parts, got: obs.y.dim() });
        }
        if obs.row.mean_covariates.len() != p {
            return Err(Error::Dimension { expected: p, got: obs.row.mean_covariates.len() });
        }
        if obs.row.precision_covariates.len() != p_phi {
            return Err(Error::Dimension { expected: p_phi, got: obs.row.precision_covariates.len() });
        }
    }
    if train.len() <= p + p_phi {
        return Err(Error::Config(format!(
            "need more than {} training observations, got {}",
            p + p_phi,
            train.len()
        )));
    }
    check_full_rank(train.iter().map(|o| o.row.mean_covariates.as_slice()), p, "mean")?;
    check_full_rank(train.iter().map(|o| o.row.precision_covariates.as_slice()), p_phi, "precision")?;

    let start = initial_coefficients(train);
    let objective = |flat: &[f64]| {
        let coeffs = Coefficients::from_flat(flat, parts, p, p_phi).ok()?;
        nll_and_gradient(train, &coeffs).ok()
    };
    let result = optim::minimize(objective, start.flatten(), &config.optimizer).ok_or_else(|| {
        Error::Fit(Convergence { iterations: 0, gradient_norm: f64::NAN, neg_log_likelihood: f64::NAN, converged: false })
    })?;
    let convergence = Convergence {
        iterations: result.iterations,
        gradient_norm: result.grad_norm,
        neg_log_likelihood: result.value,
        converged: result.converged,
    };
    if !result.converged {
        return Err(Error::Fit(convergence));
    }
    Ok(FittedModel {
        coefficients: Coefficients::from_flat(&result.x, parts, p, p_phi)?,
        parts,
        convergence,
        standardization: None,
    })
}

// Cholesky of the Gram matrix with a relative pivot threshold.
fn check_full_rank<'a>(rows: impl Iterator<Item = &'a [f64]>, p: usize, which: &str) -> Result<()> {
    let mut gram = vec![0.0; p * p];
    for r in rows {
        for i in 0..p {
            for j in 0..p {
                gram[i * p + j] += r[i] * r[j];
            }
        }
    }
    let scale: Vec<f64> = (0..p).map(|i| gram[i * p + i].sqrt().max(f64::MIN_POSITIVE)).collect();
    for i in 0..p {
        for j in 0..p {
            gram[i * p + j] /= scale[i] * scale[j];
        }
    }
    for k in 0..p {
        let mut d = gram[k * p + k];
        for m in 0..k {
            d -= gram[k * p + m] * gram[k * p + m];
        }
        if !(d > 1e-10) {
            return Err(Error::Rank(format!("{which} design column {k} is collinear with earlier columns")));
        }
        let d = d.sqrt();
        gram[k * p + k] = d;
        for i in k + 1..p {
            let mut v = gram[i * p + k];
            for m in 0..k {
                v -= gram[i * p + m] * gram[k * p + m];
            }
            gram[i * p + k] = v / d;
        }
    }
    Ok(())
}
