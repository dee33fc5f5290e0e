use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::dirichlet::{sample, sample_gamma, MeanPrecision};
use crate::error::{Error, Result};
use crate::regression::{linear_predictors, Coefficients, DesignRow, Observation};

/// Distribution of one simulated covariate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovariateLaw {
    Uniform,
    Bernoulli(f64),
    /// Gamma with the given shape and rate.
    Gamma { shape: f64, rate: f64 },
}

impl CovariateLaw {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CovariateLaw::Uniform => rng.random(),
            CovariateLaw::Bernoulli(p) => f64::from(u8::from(rng.random::<f64>() < p)),
            CovariateLaw::Gamma { shape, rate } => sample_gamma(shape, rng) / rate,
        }
    }
}

/// A data-generating design: covariate laws plus true coefficients.
///
/// Covariates are shared by the mean and precision predictors, each with a
/// leading intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub id: String,
    pub parts: usize,
    pub n: usize,
    pub coefficients: Coefficients,
    pub covariate_laws: Vec<CovariateLaw>,
    pub seed: u64,
}

/// γ₁ of the high-precision ("b") variants.
pub const HIGH_PRECISION_INTERCEPT: f64 = 4.6;
const BASE_PRECISION_INTERCEPT: f64 = 3.0;

impl ScenarioSpec {
    /// Scenarios `1a` … `5b` with three parts and `n = 1000`.
    pub fn named(id: &str) -> Result<Self> {
        Self::named_with_parts(id, 3)
    }

    /// Like [`ScenarioSpec::named`]; `parts = 4` appends a fourth component
    /// with the slopes of component 3 swapped.
    pub fn named_with_parts(id: &str, parts: usize) -> Result<Self> {
        let bad = || Error::Config(format!("unknown scenario '{id}' (expected 1a..5b)"));
        let mut chars = id.chars();
        let number = chars.next().and_then(|c| c.to_digit(10)).ok_or_else(bad)?;
        let variant = chars.next().ok_or_else(bad)?;
        if chars.next().is_some() || !(1..=5).contains(&number) || !matches!(variant, 'a' | 'b') {
            return Err(bad());
        }
        if !(3..=4).contains(&parts) {
            return Err(Error::Config(format!("scenarios are defined for 3 or 4 parts, got {parts}")));
        }
        let (b21, b31) = match number {
            2 => (0.7, -0.7),
            3 => (1.5, -1.5),
            _ => (-0.3, -0.3),
        };
        let mut beta = vec![vec![b21, 1.0, -0.5], vec![b31, -0.5, 1.0]];
        if parts == 4 {
            beta.push(vec![-0.3, 1.0, -0.5]);
        }
        let g1 = if variant == 'a' { BASE_PRECISION_INTERCEPT } else { HIGH_PRECISION_INTERCEPT };
        let gamma = if number == 4 { vec![g1, 0.5, -0.5] } else { vec![g1, 0.0, 0.0] };
        let covariate_laws = if number == 5 {
            vec![CovariateLaw::Bernoulli(0.5), CovariateLaw::Gamma { shape: 3.0, rate: 6.0 }]
        } else {
            vec![CovariateLaw::Uniform; 2]
        };
        Ok(ScenarioSpec {
            id: id.to_string(),
            parts,
            n: 1000,
            coefficients: Coefficients { beta, gamma },
            covariate_laws,
            seed: 0,
        })
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Overrides the precision intercept γ₁.
    pub fn with_precision_intercept(mut self, gamma1: f64) -> Self {
        self.coefficients.gamma[0] = gamma1;
        self
    }
}

/// One observation together with its true Dirichlet parameters.
pub fn draw_observation<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<(Observation, MeanPrecision)> {
    let covs: Vec<f64> = spec.covariate_laws.iter().map(|law| law.draw(rng)).collect();
    let row = DesignRow::shared(&covs);
    let mp = linear_predictors(&row, &spec.coefficients)?;
    let y = sample(&mp, rng);
    Ok((Observation { row, y }, mp))
}

pub fn generate_with_truth<R: Rng + ?Sized>(
    spec: &ScenarioSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<(Observation, MeanPrecision)>> {
    (0..n).map(|_| draw_observation(spec, rng)).collect()
}

/// `spec.n` observations, deterministic in `spec.seed`.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Vec<Observation>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(generate_with_truth(spec, spec.n, &mut rng)?.into_iter().map(|(o, _)| o).collect())
}
