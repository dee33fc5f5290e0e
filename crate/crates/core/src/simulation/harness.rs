use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::scenario::{generate_with_truth, ScenarioSpec};
use crate::conformal::split_data;
use crate::dirichlet::{CompositionalVector, MeanPrecision};
use crate::error::{Error, Result};
use crate::hdr::{floor_polytope_from_tau, interior_grid, level_threshold};
use crate::parallel::with_worker_pool;
use crate::pipeline::{calibrate_and_evaluate, EvalSummary, Evaluation, Method, MethodSettings, SummaryAccumulator};
use crate::regression::{fit_mle, FitConfig, FittedModel, Observation};

/// Largest tolerated fraction of iterations whose fit fails.
pub const FAILURE_TOLERANCE: f64 = 0.01;
const TRAIN_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub master_seed: u64,
    /// Lattice points per axis for the refined HDR grid (default by part count).
    pub grid_m: Option<usize>,
    /// Lattice points per axis for the whole-simplex grid (default by part count).
    pub simplex_m: Option<usize>,
    /// Record wall-clock time; off keeps summaries reproducible bit for bit.
    pub timing: bool,
    /// Use the true data-generating parameters instead of a fitted model.
    pub oracle: bool,
    pub fit: FitConfig,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions { master_seed: 0, grid_m: None, simplex_m: None, timing: false, oracle: false, fit: FitConfig::default() }
    }
}

/// Generator for iteration `index`: the master seed selects the key and the
/// iteration index the stream, so results do not depend on scheduling.
pub fn iteration_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

enum IterationOutcome {
    Evaluated(Vec<Evaluation>),
    FitFailed,
}

fn run_iteration(
    spec: &ScenarioSpec,
    methods: &[Method],
    settings: &MethodSettings,
    opts: &McOptions,
    index: u64,
) -> Result<IterationOutcome> {
    let mut rng = iteration_rng(opts.master_seed, index);
    let mut data = generate_with_truth(spec, spec.n + 1, &mut rng)?;
    let (test_obs, test_truth) = data.pop().expect("n + 1 observations");
    let split = split_data(spec.n, (TRAIN_FRACTION, 1.0 - TRAIN_FRACTION, 0.0), rng.random())?;

    let (cal_params, test_params) = if opts.oracle {
        let cal = split.calibration.iter().map(|&i| data[i].1.clone()).collect::<Vec<_>>();
        (cal, test_truth)
    } else {
        let train: Vec<Observation> = split.train.iter().map(|&i| data[i].0.clone()).collect();
        let fitted = fit_mle(&train, &opts.fit).and_then(|model| {
            let cal = predict_all(&model, split.calibration.iter().map(|&i| &data[i].0))?;
            let test = model.predict_standardized(&test_obs.row)?;
            Ok((cal, test))
        });
        match fitted {
            Ok(p) => p,
            Err(e) if e.is_fit_failure() || e.is_numeric() => return Ok(IterationOutcome::FitFailed),
            Err(e) => return Err(e),
        }
    };
    let cal_y: Vec<&CompositionalVector> = split.calibration.iter().map(|&i| &data[i].0.y).collect();
    let test = [(test_params, &test_obs.y)];
    let mut evaluations = Vec::with_capacity(methods.len());
    for &method in methods {
        let mut e = calibrate_and_evaluate(method, &cal_params, &cal_y, &test, settings)?;
        evaluations.push(e.pop().expect("one test point"));
    }
    Ok(IterationOutcome::Evaluated(evaluations))
}

fn predict_all<'a>(model: &FittedModel, obs: impl Iterator<Item = &'a Observation>) -> Result<Vec<MeanPrecision>> {
    obs.map(|o| model.predict_standardized(&o.row)).collect()
}

/// Monte Carlo study: each iteration draws `n` observations plus one fresh
/// test point, splits 70/30 into training and calibration, fits, calibrates
/// every method and evaluates the test point.
pub fn run_monte_carlo(
    spec: &ScenarioSpec,
    methods: &[Method],
    iterations: usize,
    alpha: f64,
    opts: &McOptions,
) -> Result<Vec<EvalSummary>> {
    if iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let mut settings = MethodSettings::for_parts(alpha, spec.parts);
    if let Some(m) = opts.grid_m {
        settings.grid_m = m;
    }
    if let Some(m) = opts.simplex_m {
        settings.simplex_m = m;
    }
    if settings.grid_m < 2 || settings.simplex_m < 2 {
        return Err(Error::Config("grid resolution must be at least 2".into()));
    }

    let outcomes: Vec<Result<IterationOutcome>> = with_worker_pool(|| {
        (0..iterations as u64)
            .into_par_iter()
            .map(|i| run_iteration(spec, methods, &settings, opts, i))
            .collect()
    });

    let mut accumulators: Vec<SummaryAccumulator> =
        methods.iter().map(|&m| SummaryAccumulator::new(m, spec.parts)).collect();
    let mut failures = 0;
    for outcome in outcomes {
        match outcome? {
            IterationOutcome::Evaluated(evals) => {
                accumulators.iter_mut().zip(&evals).for_each(|(acc, e)| acc.push(e));
            }
            IterationOutcome::FitFailed => failures += 1,
        }
    }
    if failures as f64 > FAILURE_TOLERANCE * iterations as f64 {
        return Err(Error::TooManyFailures { failures, total: iterations });
    }
    Ok(accumulators.iter().map(|acc| acc.finish(&spec.id, opts.timing, failures)).collect())
}

/// Lattice over the whole simplex with `m` points per axis.
pub fn full_simplex_grid(parts: usize, m: usize) -> Vec<CompositionalVector> {
    let level = level_threshold(
        &MeanPrecision::new(vec![1.0 / parts as f64; parts], parts as f64).expect("uniform parameters"),
        f64::INFINITY,
    );
    interior_grid(&floor_polytope_from_tau(vec![0.0; parts], level), m)
}

/// Refined HDR grid against the whole-simplex grid on identical data, timed.
pub fn compare_hdr_vs_full(
    spec: &ScenarioSpec,
    iterations: usize,
    alpha: f64,
    m_hdr: usize,
    m_full: usize,
    opts: &McOptions,
) -> Result<Vec<EvalSummary>> {
    if !(3..=4).contains(&spec.parts) {
        return Err(Error::Config(format!("grid comparison supports 3 or 4 parts, got {}", spec.parts)));
    }
    let opts = McOptions { grid_m: Some(m_hdr), simplex_m: Some(m_full), timing: true, ..*opts };
    run_monte_carlo(spec, &[Method::HdrFloorGrid, Method::SimplexGrid], iterations, alpha, &opts)
}
