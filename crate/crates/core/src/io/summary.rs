use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::pipeline::{EvalSummary, Method};

fn header(parts: usize) -> Vec<String> {
    let mut h = vec!["scenario".to_string(), "method".into(), "coverage_pct".into()];
    h.extend((1..=parts).map(|j| format!("cov_y{j}")));
    h.extend((1..=parts).map(|j| format!("width_y{j}")));
    h.extend(["mean_time_s".into(), "failures".into()]);
    h
}

/// One row per summary. Floats use shortest round-trip formatting; absent
/// values are written as empty cells.
pub fn write_summaries<W: Write>(writer: W, summaries: &[EvalSummary]) -> Result<()> {
    let parts = summaries.iter().map(|s| s.mean_widths.len()).max().unwrap_or(3);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(parts))?;
    for s in summaries {
        let mut rec = vec![s.scenario.clone(), s.method.label().to_string(), s.coverage_pct.to_string()];
        for j in 0..parts {
            rec.push(s.individual_coverage_pct.as_ref().and_then(|c| c.get(j)).map_or(String::new(), f64::to_string));
        }
        for j in 0..parts {
            rec.push(s.mean_widths.get(j).map_or(String::new(), f64::to_string));
        }
        rec.push(s.mean_time_s.map_or(String::new(), |t| t.to_string()));
        rec.push(s.failures.to_string());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_summaries`]; `evaluations` is not stored and reads as 0.
pub fn read_summaries<R: Read>(reader: R) -> Result<Vec<EvalSummary>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let head = rdr.headers()?.clone();
    let parts = head.iter().filter(|h| h.starts_with("width_y")).count();
    if head.iter().collect::<Vec<_>>() != header(parts) {
        return Err(Error::Schema("unexpected summary header".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let num = |k: usize| -> Result<Option<f64>> {
            let cell = &rec[k];
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse().map(Some).map_err(|_| Error::Parse { row, message: format!("bad number '{cell}'") })
        };
        let method: Method = rec[1].parse().map_err(|_| Error::Parse { row, message: format!("bad method '{}'", &rec[1]) })?;
        let cov = (0..parts).map(|j| num(3 + j)).collect::<Result<Option<Vec<_>>>>()?;
        let widths = (0..parts).map(|j| num(3 + parts + j)).collect::<Result<Option<Vec<_>>>>()?;
        out.push(EvalSummary {
            scenario: rec[0].to_string(),
            method,
            coverage_pct: num(2)?.ok_or_else(|| Error::Parse { row, message: "missing coverage".into() })?,
            individual_coverage_pct: cov,
            mean_widths: widths.unwrap_or_default(),
            mean_time_s: num(3 + 2 * parts)?,
            failures: rec[4 + 2 * parts]
                .parse()
                .map_err(|_| Error::Parse { row, message: "bad failure count".into() })?,
            evaluations: 0,
        });
    }
    Ok(out)
}
