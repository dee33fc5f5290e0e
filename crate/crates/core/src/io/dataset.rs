use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dirichlet::CompositionalVector;
use crate::error::{Error, Result};
use crate::regression::{DesignRow, Observation, Standardization};

/// Shares are clamped into `[SHARE_CLAMP, 1 − SHARE_CLAMP]` before the final renormalization.
pub const SHARE_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateColumn {
    pub column: String,
    /// Take the natural logarithm of the raw value.
    #[serde(default)]
    pub log: bool,
    #[serde(default = "yes")]
    pub standardize: bool,
}

fn yes() -> bool {
    true
}

impl CovariateColumn {
    pub fn new(column: impl Into<String>) -> Self {
        CovariateColumn { column: column.into(), log: false, standardize: true }
    }

    pub fn logged(column: impl Into<String>) -> Self {
        CovariateColumn { log: true, ..Self::new(column) }
    }

    /// Display name, e.g. `log(totexp)`.
    pub fn label(&self) -> String {
        if self.log {
            format!("log({})", self.column)
        } else {
            self.column.clone()
        }
    }
}

/// Which columns hold the response parts and the covariates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub response_columns: Vec<String>,
    #[serde(default)]
    pub mean_covariates: Vec<CovariateColumn>,
    #[serde(default)]
    pub precision_covariates: Vec<CovariateColumn>,
}

impl DatasetSchema {
    pub fn validate(&self) -> Result<()> {
        if self.response_columns.len() < 2 {
            return Err(Error::Schema("at least two response columns are required".into()));
        }
        for c in self.mean_covariates.iter().chain(&self.precision_covariates) {
            if self.response_columns.contains(&c.column) {
                return Err(Error::Schema(format!("column '{}' is both a response and a covariate", c.column)));
            }
        }
        Ok(())
    }

    pub fn parts(&self) -> usize {
        self.response_columns.len()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: DatasetSchema = toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Parsed observations on the standardized scale, with the raw design rows
/// and the standardization that maps one onto the other.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: DatasetSchema,
    pub observations: Vec<Observation>,
    pub raw_rows: Vec<DesignRow>,
    pub standardization: Standardization,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn parts(&self) -> usize {
        self.schema.parts()
    }
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    read_dataset(std::fs::File::open(path)?, schema)
}

/// Reads delimited text with a header row.
pub fn read_dataset<R: Read>(reader: R, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: HashMap<String, usize> =
        rdr.headers()?.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
    let index = |name: &str| {
        header.get(name).copied().ok_or_else(|| Error::Parse { row: 0, message: format!("missing column '{name}'") })
    };
    let response_idx = schema.response_columns.iter().map(|c| index(c)).collect::<Result<Vec<_>>>()?;
    let mean_idx = schema.mean_covariates.iter().map(|c| index(&c.column)).collect::<Result<Vec<_>>>()?;
    let prec_idx = schema.precision_covariates.iter().map(|c| index(&c.column)).collect::<Result<Vec<_>>>()?;

    let mut responses = Vec::new();
    let mut raw_rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let cell = |idx: usize| -> Result<f64> {
            let text = record.get(idx).unwrap_or("");
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { row, message: format!("non-numeric cell '{text}'") })
        };
        let shares = response_idx.iter().map(|&j| cell(j)).collect::<Result<Vec<_>>>()?;
        responses.push(normalize_shares(&shares).map_err(|message| Error::Parse { row, message })?);
        let covariates = |idx: &[usize], cols: &[CovariateColumn]| -> Result<Vec<f64>> {
            std::iter::once(Ok(1.0))
                .chain(idx.iter().zip(cols).map(|(&j, c)| {
                    let v = cell(j)?;
                    if !c.log {
                        Ok(v)
                    } else if v > 0.0 {
                        Ok(v.ln())
                    } else {
                        Err(Error::Parse { row, message: format!("log of non-positive value in '{}'", c.column) })
                    }
                }))
                .collect()
        };
        raw_rows.push(DesignRow {
            mean_covariates: covariates(&mean_idx, &schema.mean_covariates)?,
            precision_covariates: covariates(&prec_idx, &schema.precision_covariates)?,
        });
    }
    if raw_rows.is_empty() {
        return Err(Error::Parse { row: 0, message: "no data rows".into() });
    }

    let standardization = Standardization {
        mean_covariates: affine_maps(&raw_rows, |r| &r.mean_covariates, &schema.mean_covariates),
        precision_covariates: affine_maps(&raw_rows, |r| &r.precision_covariates, &schema.precision_covariates),
    };
    let observations = raw_rows
        .iter()
        .zip(responses)
        .map(|(r, y)| Ok(Observation { row: standardization.apply(r)?, y }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { schema: schema.clone(), observations, raw_rows, standardization })
}

/// Scales to unit sum, clamps into the open unit interval and rescales.
fn normalize_shares(shares: &[f64]) -> std::result::Result<CompositionalVector, String> {
    if let Some(v) = shares.iter().find(|v| **v < 0.0) {
        return Err(format!("negative share {v}"));
    }
    let total: f64 = shares.iter().sum();
    if total <= 0.0 {
        return Err("all shares are zero".into());
    }
    let clamped: Vec<f64> = shares.iter().map(|v| (v / total).clamp(SHARE_CLAMP, 1.0 - SHARE_CLAMP)).collect();
    let total: f64 = clamped.iter().sum();
    CompositionalVector::new(clamped.iter().map(|v| v / total).collect()).map_err(|e| e.to_string())
}

// Sample mean and standard deviation per non-intercept column; identity when
// standardization is off or the column is constant.
fn affine_maps(rows: &[DesignRow], get: impl Fn(&DesignRow) -> &Vec<f64>, cols: &[CovariateColumn]) -> Vec<(f64, f64)> {
    let n = rows.len() as f64;
    cols.iter()
        .enumerate()
        .map(|(k, c)| {
            if !c.standardize {
                return (0.0, 1.0);
            }
            let mean = rows.iter().map(|r| get(r)[k + 1]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (get(r)[k + 1] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            let sd = var.sqrt();
            if sd > 0.0 {
                (mean, sd)
            } else {
                (0.0, 1.0)
            }
        })
        .collect()
}
