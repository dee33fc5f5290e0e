//! Datasets, schemas and on-disk formats.

mod dataset;
mod model;
mod region;
mod summary;

pub use dataset::{load_dataset, read_dataset, CovariateColumn, Dataset, DatasetSchema, SHARE_CLAMP};
pub use model::{load_model, model_from_str, model_to_string, save_model, ModelFile, MODEL_FORMAT_VERSION};
pub use region::{read_regions, region_bounds, write_regions, RegionRecord};
pub use summary::{read_summaries, write_summaries};
