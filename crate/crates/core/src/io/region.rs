use std::io::{Read, Write};

use crate::conformal::{qr_region_at, region_contains, region_widths, ConformalQuantile, PredictionRegion};
use crate::dirichlet::{CompositionalVector, MeanPrecision};
use crate::error::{Error, Result};
use crate::hdr::{floor_polytope, grid_region, simplex_grid_region};
use crate::pipeline::{build_region, Method, MethodSettings};

/// One predicted region in flat form: enough to rebuild it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRecord {
    pub row: usize,
    pub method: Method,
    pub alpha: f64,
    /// Conformal score threshold; `inf` for the whole simplex.
    pub q: f64,
    pub grid_m: usize,
    pub phi: f64,
    pub mu: Vec<f64>,
    /// Observed response, when known.
    pub y: Option<Vec<f64>>,
    pub covered: Option<bool>,
    pub widths: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl RegionRecord {
    pub fn params(&self) -> Result<MeanPrecision> {
        MeanPrecision::new(self.mu.clone(), self.phi)
    }

    pub fn response(&self) -> Option<CompositionalVector> {
        self.y.as_ref().and_then(|y| CompositionalVector::new(y.clone()).ok())
    }

    /// Builds the region at `mp` and records it, with coverage when `y` is known.
    pub fn predict(
        row: usize,
        method: Method,
        q: &ConformalQuantile,
        settings: &MethodSettings,
        mp: &MeanPrecision,
        y: Option<&CompositionalVector>,
    ) -> Result<Self> {
        let region = build_region(method, mp, q, settings)?;
        let grid_m = match method {
            Method::SimplexGrid => settings.simplex_m,
            _ => settings.grid_m,
        };
        Ok(RegionRecord {
            row,
            method,
            alpha: q.alpha,
            q: q.value,
            grid_m,
            phi: mp.phi(),
            mu: mp.mu().to_vec(),
            y: y.map(|y| y.parts().to_vec()),
            covered: y.map(|y| region_contains(&region, y)),
            widths: region_widths(&region),
            bounds: region_bounds(&region),
        })
    }

    /// Recomputes the region from the stored parameters and threshold.
    pub fn rebuild(&self) -> Result<PredictionRegion> {
        let mp = self.params()?;
        Ok(match self.method {
            Method::Qr => PredictionRegion::Box(qr_region_at(&mp, self.q)?),
            Method::HdrFloor => PredictionRegion::FloorPolytope(floor_polytope(&mp, self.q)),
            Method::HdrFloorGrid => PredictionRegion::LevelSetGrid(grid_region(&mp, self.q, self.grid_m)),
            Method::SimplexGrid => PredictionRegion::LevelSetGrid(simplex_grid_region(&mp, self.q, self.grid_m)),
        })
    }
}

/// Per-component `[lo, hi]` spanned by the region; NaN for an empty grid.
pub fn region_bounds(region: &PredictionRegion) -> Vec<(f64, f64)> {
    match region {
        PredictionRegion::Box(b) => b.intervals.clone(),
        PredictionRegion::FloorPolytope(f) => f.marginal_bounds(),
        PredictionRegion::LevelSetGrid(g) => {
            let d = g.floor.tau.len();
            if g.accepted.is_empty() {
                return vec![(f64::NAN, f64::NAN); d];
            }
            (0..d)
                .map(|j| {
                    g.accepted
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[j]), hi.max(p[j])))
                })
                .collect()
        }
    }
}

fn header(parts: usize) -> Vec<String> {
    let mut h: Vec<String> = ["row", "method", "alpha", "q", "grid_m", "phi"].map(String::from).to_vec();
    for prefix in ["mu", "y"] {
        h.extend((1..=parts).map(|j| format!("{prefix}_{j}")));
    }
    h.push("covered".into());
    for prefix in ["width", "lo", "hi"] {
        h.extend((1..=parts).map(|j| format!("{prefix}_{j}")));
    }
    h
}

pub fn write_regions<W: Write>(writer: W, records: &[RegionRecord]) -> Result<()> {
    let parts = records.first().map_or(3, |r| r.mu.len());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(parts))?;
    for r in records {
        if r.mu.len() != parts {
            return Err(Error::Dimension { expected: parts, got: r.mu.len() });
        }
        let mut rec = vec![
            r.row.to_string(),
            r.method.label().to_string(),
            r.alpha.to_string(),
            r.q.to_string(),
            r.grid_m.to_string(),
            r.phi.to_string(),
        ];
        rec.extend(r.mu.iter().map(f64::to_string));
        match &r.y {
            Some(y) => rec.extend(y.iter().map(f64::to_string)),
            None => rec.extend(std::iter::repeat_n(String::new(), parts)),
        }
        rec.push(r.covered.map_or(String::new(), |c| u8::from(c).to_string()));
        rec.extend(r.widths.iter().map(f64::to_string));
        rec.extend(r.bounds.iter().map(|b| b.0.to_string()));
        rec.extend(r.bounds.iter().map(|b| b.1.to_string()));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_regions<R: Read>(reader: R) -> Result<Vec<RegionRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let head = rdr.headers()?.clone();
    let parts = head.iter().filter(|h| h.starts_with("mu_")).count();
    if head.iter().collect::<Vec<_>>() != header(parts) {
        return Err(Error::Schema("unexpected region header".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec?;
        let bad = |what: &str| Error::Parse { row: line, message: format!("bad {what} '{}'", &rec[head.iter().position(|h| h == what).unwrap_or(0)]) };
        let num = |k: usize| -> Result<f64> {
            rec[k].parse::<f64>().map_err(|_| Error::Parse { row: line, message: format!("bad number '{}'", &rec[k]) })
        };
        let vec_at = |start: usize| (start..start + parts).map(num).collect::<Result<Vec<_>>>();
        let y_start = 6 + parts;
        let y = if rec[y_start].is_empty() { None } else { Some(vec_at(y_start)?) };
        let covered = match &rec[y_start + parts] {
            "" => None,
            "1" => Some(true),
            "0" => Some(false),
            _ => return Err(bad("covered")),
        };
        let w_start = y_start + parts + 1;
        let lo = vec_at(w_start + parts)?;
        let hi = vec_at(w_start + 2 * parts)?;
        out.push(RegionRecord {
            row: rec[0].parse().map_err(|_| bad("row"))?,
            method: rec[1].parse().map_err(|_| bad("method"))?,
            alpha: num(2)?,
            q: num(3)?,
            grid_m: rec[4].parse().map_err(|_| bad("grid_m"))?,
            phi: num(5)?,
            mu: vec_at(6)?,
            y,
            covered,
            widths: vec_at(w_start)?,
            bounds: lo.into_iter().zip(hi).collect(),
        });
    }
    Ok(out)
}
