//! Calibrate-and-predict plumbing shared by the simulation harness and the
//! data application.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::conformal::{conformal_quantile, qr_region, qr_score, ConformalQuantile, PredictionRegion};
use crate::dirichlet::{CompositionalVector, MeanPrecision};
use crate::error::{Error, Result};
use crate::hdr::{floor_polytope, grid_region, nll_score, simplex_grid_region};
use crate::{region_contains, region_widths};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Quantile-residual box.
    Qr,
    /// Coordinate-floor polytope.
    HdrFloor,
    /// Lattice refinement inside the floor polytope.
    HdrFloorGrid,
    /// Lattice over the whole simplex.
    SimplexGrid,
}

impl Method {
    pub const PRIMARY: [Method; 3] = [Method::Qr, Method::HdrFloor, Method::HdrFloorGrid];

    pub fn label(self) -> &'static str {
        match self {
            Method::Qr => "QR",
            Method::HdrFloor => "HDR-floor",
            Method::HdrFloorGrid => "HDR-floor-grid",
            Method::SimplexGrid => "simplex-grid",
        }
    }

    fn uses_density_score(self) -> bool {
        !matches!(self, Method::Qr)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qr" => Ok(Method::Qr),
            "hdr-floor" => Ok(Method::HdrFloor),
            "hdr-grid" | "hdr-floor-grid" => Ok(Method::HdrFloorGrid),
            "simplex-grid" | "full-grid" => Ok(Method::SimplexGrid),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Default lattice resolution per axis for the refined HDR grid.
pub fn default_grid_m(parts: usize) -> usize {
    if parts <= 3 {
        100
    } else {
        20
    }
}

/// Default lattice resolution per axis for the whole-simplex baseline.
pub fn default_simplex_m(parts: usize) -> usize {
    if parts <= 3 {
        200
    } else {
        100
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSettings {
    pub alpha: f64,
    pub grid_m: usize,
    pub simplex_m: usize,
}

impl MethodSettings {
    pub fn for_parts(alpha: f64, parts: usize) -> Self {
        MethodSettings { alpha, grid_m: default_grid_m(parts), simplex_m: default_simplex_m(parts) }
    }
}

/// Nonconformity score of `y` under `mp` for `method`.
pub fn score(method: Method, y: &CompositionalVector, mp: &MeanPrecision) -> Result<f64> {
    if method.uses_density_score() {
        nll_score(y, mp)
    } else {
        qr_score(y, mp)
    }
}

/// Conformal threshold from calibration parameters and responses.
pub fn calibrate(
    method: Method,
    params: &[MeanPrecision],
    responses: &[&CompositionalVector],
    alpha: f64,
) -> Result<ConformalQuantile> {
    if params.len() != responses.len() {
        return Err(Error::Dimension { expected: params.len(), got: responses.len() });
    }
    let scores = params
        .iter()
        .zip(responses)
        .map(|(mp, y)| score(method, y, mp))
        .collect::<Result<Vec<_>>>()?;
    conformal_quantile(&scores, alpha)
}

/// The prediction region of `method` at test parameters `mp`.
pub fn build_region(
    method: Method,
    mp: &MeanPrecision,
    q: &ConformalQuantile,
    settings: &MethodSettings,
) -> Result<PredictionRegion> {
    Ok(match method {
        Method::Qr => PredictionRegion::Box(qr_region(mp, q)?),
        Method::HdrFloor => PredictionRegion::FloorPolytope(floor_polytope(mp, q.value)),
        Method::HdrFloorGrid => PredictionRegion::LevelSetGrid(grid_region(mp, q.value, settings.grid_m)),
        Method::SimplexGrid => PredictionRegion::LevelSetGrid(simplex_grid_region(mp, q.value, settings.simplex_m)),
    })
}

/// Outcome of one region against one held-out response.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub covered: bool,
    /// Componentwise interval hits (box regions only).
    pub component_hits: Option<Vec<bool>>,
    pub widths: Vec<f64>,
    pub seconds: f64,
}

pub fn evaluate(region: &PredictionRegion, y: &CompositionalVector, seconds: f64) -> Evaluation {
    let component_hits = match region {
        PredictionRegion::Box(b) => Some(b.component_hits(y.parts())),
        _ => None,
    };
    Evaluation { covered: region_contains(region, y), component_hits, widths: region_widths(region), seconds }
}

/// Calibrates, builds the region at every test point and evaluates it.
/// The reported time covers calibration plus region construction, shared
/// evenly across the test points.
pub fn calibrate_and_evaluate(
    method: Method,
    cal_params: &[MeanPrecision],
    cal_responses: &[&CompositionalVector],
    test: &[(MeanPrecision, &CompositionalVector)],
    settings: &MethodSettings,
) -> Result<Vec<Evaluation>> {
    let start = Instant::now();
    let q = calibrate(method, cal_params, cal_responses, settings.alpha)?;
    let calibration_time = start.elapsed().as_secs_f64();
    let share = calibration_time / test.len().max(1) as f64;
    test.iter()
        .map(|(mp, y)| {
            let start = Instant::now();
            let region = build_region(method, mp, &q, settings)?;
            let seconds = start.elapsed().as_secs_f64() + share;
            Ok(evaluate(&region, y, seconds))
        })
        .collect()
}

/// Aggregate coverage, width and runtime of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub scenario: String,
    pub method: Method,
    /// Percentage of held-out responses inside their regions.
    pub coverage_pct: f64,
    /// Per-component interval coverage (percent), box regions only.
    pub individual_coverage_pct: Option<Vec<f64>>,
    pub mean_widths: Vec<f64>,
    /// Mean seconds per evaluated replication; `None` when timing was disabled.
    pub mean_time_s: Option<f64>,
    pub failures: usize,
    pub evaluations: usize,
}

/// Running sums behind an [`EvalSummary`]; folded in a fixed order.
#[derive(Debug, Clone)]
pub struct SummaryAccumulator {
    method: Method,
    covered: usize,
    hits: Option<Vec<usize>>,
    widths: Vec<f64>,
    seconds: f64,
    count: usize,
}

impl SummaryAccumulator {
    pub fn new(method: Method, parts: usize) -> Self {
        SummaryAccumulator { method, covered: 0, hits: None, widths: vec![0.0; parts], seconds: 0.0, count: 0 }
    }

    pub fn push(&mut self, e: &Evaluation) {
        self.count += 1;
        self.covered += usize::from(e.covered);
        if let Some(h) = &e.component_hits {
            let acc = self.hits.get_or_insert_with(|| vec![0; h.len()]);
            acc.iter_mut().zip(h).for_each(|(a, hit)| *a += usize::from(*hit));
        }
        self.widths.iter_mut().zip(&e.widths).for_each(|(a, w)| *a += w);
        self.seconds += e.seconds;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self, scenario: &str, timing: bool, failures: usize) -> EvalSummary {
        let n = self.count.max(1) as f64;
        EvalSummary {
            scenario: scenario.to_string(),
            method: self.method,
            coverage_pct: 100.0 * self.covered as f64 / n,
            individual_coverage_pct: self.hits.as_ref().map(|h| h.iter().map(|c| 100.0 * *c as f64 / n).collect()),
            mean_widths: self.widths.iter().map(|w| w / n).collect(),
            mean_time_s: timing.then(|| self.seconds / n),
            failures,
            evaluations: self.count,
        }
    }
}

/// Averages per-repeat summaries of the same method field by field.
pub fn average_summaries(scenario: &str, runs: &[EvalSummary], failures: usize) -> Option<EvalSummary> {
    let first = runs.first()?;
    let k = runs.len() as f64;
    let mean_vec = |get: &dyn Fn(&EvalSummary) -> Vec<f64>| -> Vec<f64> {
        let mut acc = vec![0.0; get(first).len()];
        for r in runs {
            acc.iter_mut().zip(get(r)).for_each(|(a, v)| *a += v / k);
        }
        acc
    };
    Some(EvalSummary {
        scenario: scenario.to_string(),
        method: first.method,
        coverage_pct: runs.iter().map(|r| r.coverage_pct).sum::<f64>() / k,
        individual_coverage_pct: first
            .individual_coverage_pct
            .as_ref()
            .map(|_| mean_vec(&|r| r.individual_coverage_pct.clone().unwrap_or_default())),
        mean_widths: mean_vec(&|r| r.mean_widths.clone()),
        mean_time_s: first.mean_time_s.map(|_| runs.iter().filter_map(|r| r.mean_time_s).sum::<f64>() / k),
        failures,
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing() {
        assert_eq!("qr".parse::<Method>().unwrap(), Method::Qr);
        assert_eq!("hdr-grid".parse::<Method>().unwrap(), Method::HdrFloorGrid);
        assert_eq!("HDR-floor".parse::<Method>().unwrap(), Method::HdrFloor);
        assert!("ellipse".parse::<Method>().is_err());
    }

    #[test]
    fn accumulator_means() {
        let mut acc = SummaryAccumulator::new(Method::Qr, 2);
        acc.push(&Evaluation { covered: true, component_hits: Some(vec![true, true]), widths: vec![0.2, 0.4], seconds: 1.0 });
        acc.push(&Evaluation { covered: false, component_hits: Some(vec![true, false]), widths: vec![0.4, 0.0], seconds: 3.0 });
        let s = acc.finish("t", true, 0);
        assert_eq!(s.coverage_pct, 50.0);
        assert_eq!(s.individual_coverage_pct, Some(vec![100.0, 50.0]));
        assert!((s.mean_widths[0] - 0.3).abs() < 1e-15);
        assert_eq!(s.mean_time_s, Some(2.0));
        assert_eq!(acc.finish("t", false, 0).mean_time_s, None);
    }
}
