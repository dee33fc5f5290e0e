use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use simplexconf::application::{run_application, RunConfig};
use simplexconf::io::{
    load_dataset, load_model, read_regions, save_model, write_regions, write_summaries, DatasetSchema, ModelFile,
    RegionRecord,
};
use simplexconf::pipeline::{calibrate, MethodSettings};
use simplexconf::plot::emit_ternary_plot;
use simplexconf::regression::predict_params;
use simplexconf::simulation::{compare_hdr_vs_full, run_monte_carlo, McOptions, ScenarioSpec};
use simplexconf::{fit_mle, split_data, CompositionalVector, Error, FitConfig, Method, Result};

/// Conformal prediction regions for Dirichlet regression.
#[derive(Parser)]
#[command(name = "simplexconf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a Dirichlet regression and save it.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate a saved model and write one region per test row.
    Predict(PredictArgs),
    /// Monte Carlo study on a simulated scenario.
    Simulate(SimulateArgs),
    /// Refined HDR grid against the whole-simplex grid.
    CompareGrid(CompareArgs),
    /// Repeated train/calibration/test splits on a dataset.
    Apply(ApplyArgs),
    /// Ternary SVG of one region from a `predict` output.
    Plot {
        #[arg(long)]
        region: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Value of the `row` column to draw; the first record by default.
        #[arg(long)]
        row: Option<usize>,
    },
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Rows to predict. Without `--calibration` they are split into a
    /// calibration and a test part.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long, default_value = "hdr-grid")]
    method: Method,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long)]
    grid_m: Option<usize>,
    /// Share of `--data` used for calibration when no calibration file is given.
    #[arg(long, default_value_t = 2.0 / 3.0)]
    calibration_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 3)]
    dims: usize,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "qr,hdr-floor,hdr-grid")]
    methods: Vec<Method>,
    /// Sample size per iteration (training plus calibration).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    grid_m: Option<usize>,
    /// Overrides the precision intercept of the scenario.
    #[arg(long)]
    gamma1: Option<f64>,
    /// Use the true parameters instead of fitted ones.
    #[arg(long)]
    oracle: bool,
    /// Record mean calibrate-and-predict time (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 3)]
    dims: usize,
    #[arg(long)]
    m_hdr: Option<usize>,
    #[arg(long)]
    m_full: Option<usize>,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "qr,hdr-floor,hdr-grid")]
    methods: Vec<Method>,
    #[arg(long)]
    grid_m: Option<usize>,
    /// Row label in the summary.
    #[arg(long, default_value = "application")]
    label: String,
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_fit_failure() {
        3
    } else if e.is_numeric() {
        4
    } else {
        2
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufWriter::new(File::create(p)?)),
        _ => Box::new(io::stdout().lock()),
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit { data, schema, out } => {
            let schema = DatasetSchema::load(schema)?;
            let dataset = load_dataset(data, &schema)?;
            let mut model = fit_mle(&dataset.observations, &FitConfig::default())?;
            model.standardization = Some(dataset.standardization.clone());
            let c = &model.convergence;
            eprintln!(
                "fitted {} rows in {} iterations, negative log-likelihood {:.6}",
                dataset.len(),
                c.iterations,
                c.neg_log_likelihood
            );
            save_model(&ModelFile::new(model, Some(schema)), out)
        }
        Command::Predict(args) => predict(args),
        Command::Simulate(args) => {
            let mut spec = ScenarioSpec::named_with_parts(&args.scenario, args.dims)?;
            if let Some(n) = args.n {
                spec = spec.with_n(n);
            }
            if let Some(g) = args.gamma1 {
                spec = spec.with_precision_intercept(g);
            }
            let opts = McOptions {
                master_seed: args.seed,
                grid_m: args.grid_m,
                timing: args.timing,
                oracle: args.oracle,
                ..McOptions::default()
            };
            let summaries = run_monte_carlo(&spec, &args.methods, args.iters, args.alpha, &opts)?;
            write_summaries(output(args.out.as_deref())?, &summaries)
        }
        Command::CompareGrid(args) => {
            let spec = ScenarioSpec::named_with_parts(&args.scenario, args.dims)?;
            let settings = MethodSettings::for_parts(args.alpha, args.dims);
            let summaries = compare_hdr_vs_full(
                &spec,
                args.iters,
                args.alpha,
                args.m_hdr.unwrap_or(settings.grid_m),
                args.m_full.unwrap_or(settings.simplex_m),
                &McOptions { master_seed: args.seed, ..McOptions::default() },
            )?;
            write_summaries(output(args.out.as_deref())?, &summaries)
        }
        Command::Apply(args) => {
            let schema = DatasetSchema::load(&args.schema)?;
            let dataset = load_dataset(&args.data, &schema)?;
            let config = RunConfig {
                label: args.label,
                alpha: args.alpha,
                repeats: args.repeats,
                master_seed: args.seed,
                methods: args.methods,
                grid_m: args.grid_m,
                timing: args.timing,
                ..RunConfig::default()
            };
            let summaries = run_application(&dataset, &config)?;
            write_summaries(output(args.out.as_deref())?, &summaries)
        }
        Command::Plot { region, out, row } => {
            let records = read_regions(File::open(region)?)?;
            let record = match row {
                Some(r) => records.iter().find(|rec| rec.row == r),
                None => records.first(),
            }
            .ok_or_else(|| Error::Config("no matching region row".into()))?;
            let mean = CompositionalVector::new(record.mu.clone())?;
            emit_ternary_plot(&record.rebuild()?, &mean, record.response().as_ref(), out)
        }
    }
}

fn predict(args: PredictArgs) -> Result<()> {
    let file = load_model(&args.model)?;
    let schema = file
        .schema
        .clone()
        .ok_or_else(|| Error::Schema("model file has no dataset schema".into()))?;
    let model = file.model;
    let params = |rows: &[simplexconf::DesignRow]| rows.iter().map(|r| predict_params(&model, r)).collect::<Result<Vec<_>>>();

    let data = load_dataset(&args.data, &schema)?;
    let data_params = params(&data.raw_rows)?;
    let responses: Vec<&CompositionalVector> = data.observations.iter().map(|o| &o.y).collect();

    let (cal_params, cal_y, test_idx): (Vec<_>, Vec<_>, Vec<usize>) = match &args.calibration {
        Some(path) => {
            let cal = load_dataset(path, &schema)?;
            let cal_y = cal.observations.iter().map(|o| o.y.clone()).collect::<Vec<_>>();
            (params(&cal.raw_rows)?, cal_y, (0..data.len()).collect())
        }
        None => {
            let f = args.calibration_fraction;
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("calibration fraction must lie in (0,1), got {f}")));
            }
            let split = split_data(data.len(), (0.0, f, 1.0 - f), args.seed)?;
            let cal_params = split.calibration.iter().map(|&i| data_params[i].clone()).collect();
            let cal_y = split.calibration.iter().map(|&i| responses[i].clone()).collect();
            (cal_params, cal_y, split.test)
        }
    };
    let cal_refs: Vec<&CompositionalVector> = cal_y.iter().collect();
    let q = calibrate(args.method, &cal_params, &cal_refs, args.alpha)?;
    let mut settings = MethodSettings::for_parts(args.alpha, schema.parts());
    if let Some(m) = args.grid_m {
        settings.grid_m = m;
        settings.simplex_m = m;
    }
    let records = test_idx
        .iter()
        .map(|&i| RegionRecord::predict(i + 1, args.method, &q, &settings, &data_params[i], Some(responses[i])))
        .collect::<Result<Vec<_>>>()?;
    eprintln!(
        "threshold {} from {} calibration rows; {} of {} test rows covered",
        q.value,
        q.n_cal,
        records.iter().filter(|r| r.covered == Some(true)).count(),
        records.len()
    );
    write_regions(output(args.out.as_deref())?, &records)
}
