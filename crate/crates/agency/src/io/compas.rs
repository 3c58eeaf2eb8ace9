use std::path::Path;

use agency_core::domains::recidivism::{ArresteeRecord, CHARGE_DEGREES, CHARGE_TYPES, RACES, SEXES};
use serde::{Deserialize, Serialize};

use crate::{AgencyError, Result};

/// `two_year_recid` is read as the (violent) recidivism label.
pub const REQUIRED_COLUMNS: [&str; 10] = [
    "age",
    "sex",
    "race",
    "juv_fel_count",
    "juv_misd_count",
    "juv_other_count",
    "priors_count",
    "c_charge_degree",
    "c_charge_desc",
    "two_year_recid",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeRule {
    pub pattern: String,
    pub category: String,
}

/// Maps free-text charge descriptions onto [`CHARGE_TYPES`]: the first rule
/// whose pattern occurs in the description (ignoring case) wins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeDictionary {
    pub fallback: String,
    pub rules: Vec<ChargeRule>,
}

fn category_index(name: &str) -> Option<u32> {
    CHARGE_TYPES.iter().position(|c| *c == name).map(|i| i as u32)
}

impl ChargeDictionary {
    pub fn load(path: &Path) -> Result<Self> {
        let d: ChargeDictionary = super::read_json(path)?;
        d.validate().map_err(|e| AgencyError::Config(format!("{}: {e}", path.display())))?;
        Ok(d)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for c in self.rules.iter().map(|r| &r.category).chain([&self.fallback]) {
            if category_index(c).is_none() {
                return Err(format!("unknown charge category `{c}`"));
            }
        }
        if self.rules.iter().any(|r| r.pattern.is_empty()) {
            return Err("empty charge pattern".into());
        }
        Ok(())
    }

    pub fn categorize(&self, description: &str) -> u32 {
        let d = description.to_lowercase();
        let name = self
            .rules
            .iter()
            .find(|r| d.contains(&r.pattern.to_lowercase()))
            .map_or(&self.fallback, |r| &r.category);
        category_index(name).expect("validated dictionary")
    }
}

/// `F1`..`F3`, `M1`, `M2`, optionally parenthesised. Bare `F` and `M`, which
/// is all the two-year extract records, read as `F3` and `M1`.
pub fn parse_degree(raw: &str) -> Option<u32> {
    let s = raw.trim().trim_start_matches('(').trim_end_matches(')').to_ascii_uppercase();
    let s = match s.as_str() {
        "F" => "F3",
        "M" => "M1",
        other => other,
    };
    CHARGE_DEGREES.iter().position(|d| *d == s).map(|i| i as u32)
}

#[derive(Clone, Debug)]
pub struct CompasData {
    pub records: Vec<ArresteeRecord>,
    /// Rows skipped for unparseable or out-of-vocabulary values.
    pub dropped: usize,
}

pub fn load_compas(path: &Path, charges: &ChargeDictionary) -> Result<CompasData> {
    let mut rdr = csv::Reader::from_path(path).map_err(AgencyError::csv(path))?;
    let header = rdr.headers().map_err(AgencyError::csv(path))?.clone();
    let mut idx = [0usize; REQUIRED_COLUMNS.len()];
    for (k, name) in REQUIRED_COLUMNS.iter().enumerate() {
        idx[k] = header
            .iter()
            .position(|h| h.trim() == *name)
            .ok_or_else(|| AgencyError::MissingColumn { path: path.to_path_buf(), column: name.to_string() })?;
    }
    let mut records = Vec::new();
    let mut dropped = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| AgencyError::Row { path: path.to_path_buf(), row: i + 1, reason: e.to_string() })?;
        let field = |k: usize| rec.get(idx[k]).unwrap_or("").trim();
        match parse_row(&field, charges) {
            Some(r) => records.push(r),
            None => dropped += 1,
        }
    }
    Ok(CompasData { records, dropped })
}

fn parse_row<'a>(field: &impl Fn(usize) -> &'a str, charges: &ChargeDictionary) -> Option<ArresteeRecord> {
    let count = |k: usize| field(k).parse::<u32>().ok();
    let label = match field(9) {
        "0" => 0,
        "1" => 1,
        _ => return None,
    };
    let rec = ArresteeRecord {
        age: field(0).parse::<f64>().ok().filter(|a| a.is_finite() && *a > 0.0)?,
        sex: SEXES.iter().position(|s| s.eq_ignore_ascii_case(field(1)))? as u32,
        race: RACES.iter().position(|s| s.eq_ignore_ascii_case(field(2)))? as u32,
        charge_type: charges.categorize(field(8)),
        charge_degree: parse_degree(field(7))?,
        juv_fel_count: count(3)?,
        juv_misd_count: count(4)?,
        juv_other_count: count(5)?,
        priors_count: count(6)?,
        label,
    };
    rec.validate().ok()?;
    Some(rec)
}
