//! Repeated train/calibration/test splits over a real dataset.

use rand::Rng;
use rayon::prelude::*;

use crate::conformal::split_data;
use crate::dirichlet::{CompositionalVector, MeanPrecision};
use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::parallel::with_worker_pool;
use crate::pipeline::{average_summaries, calibrate_and_evaluate, EvalSummary, Method, MethodSettings, SummaryAccumulator};
use crate::regression::{fit_mle, FitConfig, Observation};
use crate::simulation::iteration_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Row label written to the summary.
    pub label: String,
    pub alpha: f64,
    /// Training, calibration and test fractions.
    pub fractions: (f64, f64, f64),
    pub repeats: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    pub grid_m: Option<usize>,
    pub timing: bool,
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            label: "application".into(),
            alpha: 0.1,
            fractions: (0.7, 0.2, 0.1),
            repeats: 10,
            master_seed: 0,
            methods: Method::PRIMARY.to_vec(),
            grid_m: None,
            timing: false,
            fit: FitConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        Ok(())
    }
}

/// Per-method summaries averaged over the repeats whose fit succeeded.
/// `failures` counts the excluded repeats.
pub fn run_application(dataset: &Dataset, config: &RunConfig) -> Result<Vec<EvalSummary>> {
    config.validate()?;
    let mut settings = MethodSettings::for_parts(config.alpha, dataset.parts());
    if let Some(m) = config.grid_m {
        settings.grid_m = m;
    }

    let repeats: Vec<Result<Option<Vec<EvalSummary>>>> = with_worker_pool(|| {
        (0..config.repeats as u64).into_par_iter().map(|r| run_repeat(dataset, config, &settings, r)).collect()
    });

    let mut per_method: Vec<Vec<EvalSummary>> = vec![Vec::new(); config.methods.len()];
    let mut failures = 0;
    for outcome in repeats {
        match outcome? {
            Some(summaries) => per_method.iter_mut().zip(summaries).for_each(|(acc, s)| acc.push(s)),
            None => failures += 1,
        }
    }
    if failures == config.repeats {
        return Err(Error::TooManyFailures { failures, total: config.repeats });
    }
    Ok(per_method.iter().filter_map(|runs| average_summaries(&config.label, runs, failures)).collect())
}

fn run_repeat(dataset: &Dataset, config: &RunConfig, settings: &MethodSettings, repeat: u64) -> Result<Option<Vec<EvalSummary>>> {
    let seed = iteration_rng(config.master_seed, repeat).random();
    let split = split_data(dataset.len(), config.fractions, seed)?;
    let obs = &dataset.observations;
    let train: Vec<Observation> = split.train.iter().map(|&i| obs[i].clone()).collect();
    let model = match fit_mle(&train, &config.fit) {
        Ok(m) => m,
        Err(e) if e.is_fit_failure() || e.is_numeric() => return Ok(None),
        Err(e) => return Err(e),
    };
    let cal_params = split.calibration.iter().map(|&i| model.predict_standardized(&obs[i].row)).collect::<Result<Vec<_>>>()?;
    let cal_y: Vec<&CompositionalVector> = split.calibration.iter().map(|&i| &obs[i].y).collect();
    let test = split
        .test
        .iter()
        .map(|&i| Ok((model.predict_standardized(&obs[i].row)?, &obs[i].y)))
        .collect::<Result<Vec<(MeanPrecision, &CompositionalVector)>>>()?;

    config
        .methods
        .iter()
        .map(|&method| {
            let mut acc = SummaryAccumulator::new(method, dataset.parts());
            calibrate_and_evaluate(method, &cal_params, &cal_y, &test, settings)?.iter().for_each(|e| acc.push(e));
            Ok(acc.finish(&config.label, config.timing, 0))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}
