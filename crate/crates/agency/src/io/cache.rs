use std::path::Path;

use agency_core::decision_fn::{FeatureVector, QueryCache, Schema};
use agency_core::domains::credit::{sample_questionnaires, synthetic_fico};

use crate::{AgencyError, Result};

/// Reads a cache CSV: one column per schema feature, in order, then
/// `decision`. Rows are numbered from 1 in errors.
pub fn read_cache_points(path: &Path, schema: &Schema) -> Result<Vec<(FeatureVector, f64)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(AgencyError::csv(path))?;
    let header = rdr.headers().map_err(AgencyError::csv(path))?.clone();
    let expected: Vec<&str> = schema.features().iter().map(|f| f.name.as_str()).chain(["decision"]).collect();
    for (j, name) in expected.iter().enumerate() {
        if header.get(j).map(str::trim) != Some(*name) {
            return Err(AgencyError::MissingColumn { path: path.to_path_buf(), column: name.to_string() });
        }
    }
    if header.len() != expected.len() {
        return Err(AgencyError::Config(format!("{}: unexpected extra columns", path.display())));
    }
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let bad = |reason: String| AgencyError::Row { path: path.to_path_buf(), row, reason };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let mut vals = Vec::with_capacity(rec.len());
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| bad(format!("`{field}` in column `{}` is not a number", expected[j])))?;
            vals.push(v);
        }
        let y = vals.pop().expect("record has the header's width");
        points.push((FeatureVector(vals), y));
    }
    if points.is_empty() {
        return Err(AgencyError::Row { path: path.to_path_buf(), row: 1, reason: "cache has no data rows".into() });
    }
    // schema and positivity checks happen once, in the cache constructor
    QueryCache::new(schema.clone(), points.clone()).map_err(|e| match e {
        agency_core::Error::InvalidRow { row, reason } => AgencyError::Row { path: path.to_path_buf(), row, reason },
        e => e.into(),
    })?;
    Ok(points)
}

pub fn read_query_cache(path: &Path, schema: &Schema) -> Result<QueryCache> {
    let points = read_cache_points(path, schema)?;
    Ok(QueryCache::new(schema.clone(), points)?)
}

pub fn write_cache_csv(path: &Path, schema: &Schema, points: &[(FeatureVector, f64)]) -> Result<()> {
    let mut out = String::new();
    let names: Vec<&str> = schema.features().iter().map(|f| f.name.as_str()).collect();
    out.push_str(&names.join(","));
    out.push_str(",decision\n");
    for (x, y) in points {
        for v in x.iter() {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{y}\n"));
    }
    super::write_text(path, &out)
}

/// `n` random answer sheets scored by the synthetic score.
pub fn synthetic_cache_points(n: usize, seed: u64) -> Vec<(FeatureVector, f64)> {
    sample_questionnaires(n, seed)
        .into_iter()
        .map(|q| {
            let s = synthetic_fico(&q).expect("sampled answers are in range");
            (FeatureVector(q.features()), f64::from(s.0))
        })
        .collect()
}
