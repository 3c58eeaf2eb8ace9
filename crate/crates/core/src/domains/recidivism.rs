//! Pretrial risk assessment: arrestee records, a forest-backed decile risk
//! score and the charge/prior-count action model.
//!
//! Risk is minimized while the MDP machinery maximizes, so the decision the
//! MDP sees is `11 - score`; [`score_of`] converts back.

use alloc::borrow::Cow;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::decision_fn::{
    train_forest, DecisionFunction, Feature, FeatureVector, ForestConfig, Schema, TrainOutcome, TreeEnsemble,
};
use crate::mdp::{ActionId, AgencyMdp, AgencyState, Outcome};
use crate::{math, Error, Result};

pub const CHARGE_TYPES: [&str; 5] = ["drug", "violent", "theft", "traffic", "other"];
/// Least to most severe.
pub const CHARGE_DEGREES: [&str; 5] = ["M2", "M1", "F3", "F2", "F1"];
pub const SEXES: [&str; 2] = ["Male", "Female"];
pub const RACES: [&str; 6] = ["African-American", "Caucasian", "Hispanic", "Asian", "Native American", "Other"];
pub const COUNT_KINDS: [&str; 4] = ["juv_fel_count", "juv_misd_count", "juv_other_count", "priors_count"];

/// Positions in the full feature vector.
pub mod col {
    pub const AGE: usize = 0;
    pub const SEX: usize = 1;
    pub const RACE: usize = 2;
    pub const CHARGE_TYPE: usize = 3;
    pub const DEGREE: usize = 4;
    pub const JUV_FEL: usize = 5;
    pub const COUNTS: usize = 5;
    pub const PRIORS: usize = 8;
    pub const LEN: usize = 9;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArresteeRecord {
    pub age: f64,
    /// Index into [`SEXES`].
    pub sex: u32,
    /// Index into [`RACES`].
    pub race: u32,
    /// Index into [`CHARGE_TYPES`].
    pub charge_type: u32,
    /// Index into [`CHARGE_DEGREES`].
    pub charge_degree: u32,
    pub juv_fel_count: u32,
    pub juv_misd_count: u32,
    pub juv_other_count: u32,
    pub priors_count: u32,
    pub label: u8,
}

impl ArresteeRecord {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParams(format!("arrestee record: {what}")));
        if !(self.age > 0.0 && self.age.is_finite()) {
            return bad("age must be positive");
        }
        if self.sex as usize >= SEXES.len() || self.race as usize >= RACES.len() {
            return bad("unknown sex or race code");
        }
        if self.charge_type as usize >= CHARGE_TYPES.len() || self.charge_degree as usize >= CHARGE_DEGREES.len() {
            return bad("unknown charge type or degree");
        }
        if self.label > 1 {
            return bad("label must be 0 or 1");
        }
        Ok(())
    }

    /// All nine features, protected ones included.
    pub fn full_features(&self) -> Vec<f64> {
        vec![
            self.age,
            self.sex as f64,
            self.race as f64,
            self.charge_type as f64,
            self.charge_degree as f64,
            self.juv_fel_count as f64,
            self.juv_misd_count as f64,
            self.juv_other_count as f64,
            self.priors_count as f64,
        ]
    }

    pub fn features(&self, variant: ScoreVariant) -> Vec<f64> {
        variant.project(&self.full_features()).into_owned()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreVariant {
    Full,
    /// Race and sex withheld from the model; age is kept.
    Blind,
}

impl ScoreVariant {
    pub const ALL: [ScoreVariant; 2] = [ScoreVariant::Full, ScoreVariant::Blind];

    pub fn name(self) -> &'static str {
        match self {
            ScoreVariant::Full => "full",
            ScoreVariant::Blind => "blind",
        }
    }

    pub fn schema(self) -> Schema {
        let mut f = vec![Feature::numeric("age", 18.0, 80.0)];
        if self == ScoreVariant::Full {
            f.push(Feature::categorical("sex", SEXES.len() as u32));
            f.push(Feature::categorical("race", RACES.len() as u32));
        }
        f.push(Feature::categorical("charge_type", CHARGE_TYPES.len() as u32));
        f.push(Feature::ordinal("charge_degree", CHARGE_DEGREES.len() as u32));
        f.push(Feature::numeric("juv_fel_count", 0.0, 20.0));
        f.push(Feature::numeric("juv_misd_count", 0.0, 20.0));
        f.push(Feature::numeric("juv_other_count", 0.0, 20.0));
        f.push(Feature::numeric("priors_count", 0.0, 40.0));
        Schema::new(f)
    }

    /// The model's view of a full feature vector.
    pub fn project(self, full: &[f64]) -> Cow<'_, [f64]> {
        match self {
            ScoreVariant::Full => Cow::Borrowed(full),
            ScoreVariant::Blind => {
                let mut v = Vec::with_capacity(col::LEN - 2);
                v.push(full[col::AGE]);
                v.extend_from_slice(&full[col::CHARGE_TYPE..]);
                Cow::Owned(v)
            }
        }
    }
}

/// Decile risk group, 1 (lowest) to 10.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RiskScore(pub u8);

pub fn bucket_score(p: f64) -> Result<RiskScore> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(RiskScore(bucket_unchecked(p)))
}

fn bucket_unchecked(p: f64) -> u8 {
    (math::floor(p * 10.0) as u8 + 1).min(10)
}

/// Converts an MDP decision `11 - score` back to the risk score.
pub fn score_of(decision: f64) -> f64 {
    11.0 - decision
}

/// `11 - bucket_score(ensemble(x))`, in `1..=10`, higher is better for the subject.
#[derive(Clone, Debug)]
pub struct RiskDecision {
    ensemble: Arc<TreeEnsemble>,
}

impl RiskDecision {
    pub fn new(ensemble: Arc<TreeEnsemble>) -> Self {
        RiskDecision { ensemble }
    }

    pub fn ensemble(&self) -> &TreeEnsemble {
        &self.ensemble
    }

    pub fn score(&self, x: &[f64]) -> Result<RiskScore> {
        self.ensemble.schema.validate(x)?;
        bucket_score(self.ensemble.predict(x))
    }
}

impl DecisionFunction for RiskDecision {
    fn schema(&self) -> &Schema {
        &self.ensemble.schema
    }

    fn value(&self, x: &[f64]) -> f64 {
        let p = self.ensemble.predict(x).clamp(0.0, 1.0);
        11.0 - bucket_unchecked(p) as f64
    }
}

pub fn train_risk_model(records: &[ArresteeRecord], variant: ScoreVariant, config: &ForestConfig) -> Result<TrainOutcome> {
    let rows: Vec<FeatureVector> = records.iter().map(|r| r.features(variant).into()).collect();
    let labels: Vec<u8> = records.iter().map(|r| r.label).collect();
    train_forest(&variant.schema(), &rows, &labels, config)
}

fn action_labels() -> Vec<String> {
    let mut v: Vec<String> = CHARGE_TYPES.iter().map(|c| format!("charge_type := {c}")).collect();
    v.push(String::from("charge_degree +1"));
    v.push(String::from("charge_degree -1"));
    for k in COUNT_KINDS {
        v.push(format!("{k} +1"));
        v.push(format!("{k} -1"));
    }
    v
}

enum Move {
    SetCharge(u32),
    Degree(i32),
    Count(usize, i32),
}

fn decode(a: ActionId) -> Move {
    let n = CHARGE_TYPES.len();
    match a.0 {
        i if i < n => Move::SetCharge(i as u32),
        i if i == n => Move::Degree(1),
        i if i == n + 1 => Move::Degree(-1),
        i => {
            let j = i - n - 2;
            Move::Count(j / 2, if j.is_multiple_of(2) { 1 } else { -1 })
        }
    }
}

/// State features are always the full record; the variant decides what the
/// model sees. Race, sex and age have no actions.
#[derive(Clone, Debug)]
pub struct RecidivismMdp {
    df: RiskDecision,
    variant: ScoreVariant,
    labels: Vec<String>,
    start: AgencyState,
}

pub fn build_recidivism_mdp(
    ensemble: Arc<TreeEnsemble>,
    variant: ScoreVariant,
    initial: &ArresteeRecord,
    resources: u32,
) -> Result<RecidivismMdp> {
    if ensemble.schema != variant.schema() {
        return Err(Error::InvalidParams(format!("ensemble schema does not match the {} variant", variant.name())));
    }
    initial.validate()?;
    Ok(RecidivismMdp {
        df: RiskDecision::new(ensemble),
        variant,
        labels: action_labels(),
        start: AgencyState::new(initial.full_features(), resources),
    })
}

impl RecidivismMdp {
    pub fn variant(&self) -> ScoreVariant {
        self.variant
    }

    pub fn risk(&self) -> &RiskDecision {
        &self.df
    }

    /// Same model and variant, different subject or budget.
    pub fn restart(&self, initial: &ArresteeRecord, resources: u32) -> Result<Self> {
        initial.validate()?;
        let mut m = self.clone();
        m.start = AgencyState::new(initial.full_features(), resources);
        Ok(m)
    }

    pub fn risk_score(&self, s: &AgencyState) -> Result<u8> {
        Ok(score_of(self.decide(s)?) as u8)
    }

    fn apply(&self, x: &mut [f64], a: ActionId) -> bool {
        match decode(a) {
            Move::SetCharge(c) => {
                let ok = x[col::CHARGE_TYPE] != c as f64;
                x[col::CHARGE_TYPE] = c as f64;
                ok
            }
            Move::Degree(d) => {
                let v = x[col::DEGREE] + d as f64;
                x[col::DEGREE] = v;
                v >= 0.0 && v < CHARGE_DEGREES.len() as f64
            }
            Move::Count(k, d) => {
                let v = x[col::COUNTS + k] + d as f64;
                x[col::COUNTS + k] = v;
                v >= 0.0
            }
        }
    }
}

impl AgencyMdp for RecidivismMdp {
    type State = AgencyState;

    fn decision(&self) -> &dyn DecisionFunction {
        &self.df
    }

    fn action_labels(&self) -> &[String] {
        &self.labels
    }

    fn initial_state(&self) -> AgencyState {
        self.start.clone()
    }

    fn features<'s>(&self, s: &'s AgencyState) -> Cow<'s, [f64]> {
        self.variant.project(&s.features)
    }

    fn push_legal(&self, s: &AgencyState, out: &mut Vec<ActionId>) {
        let mut probe = s.features.0.clone();
        for i in 0..self.labels.len() {
            probe.copy_from_slice(&s.features);
            if self.apply(&mut probe, ActionId(i)) {
                out.push(ActionId(i));
            }
        }
    }

    fn transition(&self, s: &AgencyState, a: ActionId) -> Vec<Outcome<AgencyState>> {
        let mut next = s.clone();
        self.apply(&mut next.features, a);
        next.resources -= 1;
        vec![Outcome::certain(next)]
    }
}
