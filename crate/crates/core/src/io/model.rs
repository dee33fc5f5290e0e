use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::DatasetSchema;
use crate::error::{Error, Result};
use crate::regression::FittedModel;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk model document. Floats are written in shortest round-trip form,
/// so a reload reproduces every coefficient bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    /// Columns the model was fitted on; needed to read new data.
    pub schema: Option<DatasetSchema>,
    pub model: FittedModel,
}

impl ModelFile {
    pub fn new(model: FittedModel, schema: Option<DatasetSchema>) -> Self {
        ModelFile { version: MODEL_FORMAT_VERSION, schema, model }
    }
}

pub fn model_to_string(file: &ModelFile) -> Result<String> {
    toml::to_string(file).map_err(|e| Error::Schema(e.to_string()))
}

pub fn model_from_str(text: &str) -> Result<ModelFile> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Schema(e.message().to_string()))?;
    match doc.get("version").and_then(toml::Value::as_integer) {
        Some(v) if v == i64::from(MODEL_FORMAT_VERSION) => {}
        Some(v) => return Err(Error::Schema(format!("unsupported model version {v}"))),
        None => return Err(Error::Schema("missing 'version'".into())),
    }
    let model = doc.get("model").and_then(toml::Value::as_table).ok_or_else(|| missing("model"))?;
    let coefficients =
        model.get("coefficients").and_then(toml::Value::as_table).ok_or_else(|| missing("model.coefficients"))?;
    for block in ["beta", "gamma"] {
        if !coefficients.contains_key(block) {
            return Err(missing(&format!("model.coefficients.{block}")));
        }
    }
    let file: ModelFile = doc.try_into().map_err(|e: toml::de::Error| Error::Schema(e.message().to_string()))?;
    let c = &file.model.coefficients;
    if c.parts() != file.model.parts || c.gamma.is_empty() || c.beta.iter().any(|b| b.len() != c.mean_len()) {
        return Err(Error::Schema("inconsistent coefficient dimensions".into()));
    }
    Ok(file)
}

fn missing(block: &str) -> Error {
    Error::Schema(format!("missing block '{block}'"))
}

pub fn save_model(file: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_string(file)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    model_from_str(&std::fs::read_to_string(path)?)
}
