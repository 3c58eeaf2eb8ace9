//! File formats: query caches, COMPAS extracts, ensembles, scenarios.

mod cache;
mod compas;
mod ensemble;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{AgencyError, Result};

pub use cache::{read_cache_points, read_query_cache, synthetic_cache_points, write_cache_csv};
pub use compas::{load_compas, parse_degree, ChargeDictionary, ChargeRule, CompasData, REQUIRED_COLUMNS};
pub use ensemble::{read_ensemble, write_ensemble, EnsembleDoc};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(AgencyError::io(path))?;
    serde_json::from_str(&text).map_err(|source| AgencyError::Json { path: path.to_path_buf(), source })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| AgencyError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    write_text(path, &text)
}

/// Creates parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(AgencyError::io(dir))?;
    }
    fs::write(path, text).map_err(AgencyError::io(path))
}

pub fn read_scenario(path: &Path) -> Result<agency_core::domains::credit::Scenario> {
    let sc: agency_core::domains::credit::Scenario = read_json(path)?;
    sc.household.validate()?;
    sc.resolve_preset()?;
    Ok(sc)
}

pub fn read_bucket_table(path: &Path) -> Result<agency_core::domains::credit::BucketTable> {
    let t: agency_core::domains::credit::BucketTable = read_json(path)?;
    t.validate()?;
    Ok(t)
}
