//! Turns a [`DomainConfig`] into loaded models and MDP instances.

use std::sync::Arc;

use agency_core::decision_fn::forest::{accuracy, auc, split_indices};
use agency_core::decision_fn::{Preset, SharedDecision, TreeEnsemble};
use agency_core::domains::credit::{
    build_realistic_credit_mdp, build_simple_credit_mdp, questionnaire_schema, sample_questionnaires,
    QuestionnaireState, RealisticCreditMdp, RealisticPreset, Scenario, SimpleCreditMdp, SyntheticFico,
};
use agency_core::domains::recidivism::{
    build_recidivism_mdp, train_risk_model, ArresteeRecord, RecidivismMdp, RiskDecision, ScoreVariant,
};
use agency_core::domains::MoveMdp;
use agency_core::mdp::AgencyMdp;
use agency_core::seed::{derive_rng, derive_seed};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::config::{DomainConfig, ForestSettings, RunConfig};
use crate::io::{load_compas, read_bucket_table, read_query_cache, read_scenario, ChargeDictionary};
use crate::Result;

#[allow(clippy::large_enum_variant)]
pub enum Domain {
    Synthetic { preset: Preset, start: Vec<f64>, uniform: bool },
    SimpleCredit { df: SharedDecision },
    RealisticCredit { df: SharedDecision, preset: RealisticPreset, scenario: Scenario },
    Recidivism(Box<RecidivismSetup>),
}

/// Synthetic start: the figure presets' own start, else the box's lower corner.
pub fn default_start(preset: Preset) -> Vec<f64> {
    match preset {
        Preset::Fig1Default => vec![0.0],
        Preset::Fig2Default => vec![0.0, 0.0],
        other => other.build().domain().iter().map(|d| d.0).collect(),
    }
}

/// Figure presets use their figure action sets; other presets move one
/// unit in 8 compass directions.
pub fn synthetic_mdp(preset: Preset, start: Vec<f64>, resources: u32) -> Result<MoveMdp> {
    Ok(match preset {
        Preset::Fig1Default => MoveMdp::fig1(resources).with_start(start, resources)?,
        Preset::Fig2Default => MoveMdp::fig2(resources).with_start(start, resources)?,
        other => MoveMdp::compass(Arc::new(other.build()), 8, 1.0, start, resources)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelMetrics {
    pub variant: String,
    pub auc: f64,
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub degenerate: bool,
}

pub struct RecidivismSetup {
    pub models: Vec<(ScoreVariant, Arc<TreeEnsemble>)>,
    pub metrics: Vec<ModelMetrics>,
    /// Held-out records whose full-model score reaches the cohort threshold,
    /// in a seeded random order.
    pub cohort: Vec<ArresteeRecord>,
    /// Every held-out record, in a seeded random order.
    pub held_out: Vec<ArresteeRecord>,
    pub n_records: usize,
    pub dropped: usize,
}

impl RecidivismSetup {
    pub fn model(&self, v: ScoreVariant) -> Option<&Arc<TreeEnsemble>> {
        self.models.iter().find(|m| m.0 == v).map(|m| &m.1)
    }
}

/// Models by variant, their held-out metrics, and the held-out row indices.
pub type TrainedModels = (Vec<(ScoreVariant, Arc<TreeEnsemble>)>, Vec<ModelMetrics>, Vec<usize>);

/// Held-out split, one forest per variant, held-out AUC and accuracy at 0.5.
pub fn train_models(
    records: &[ArresteeRecord],
    variants: &[ScoreVariant],
    forest: &ForestSettings,
    test_fraction: f64,
    seed: u64,
) -> Result<TrainedModels> {
    let (train, test) = split_indices(records.len(), test_fraction, seed);
    let train_rows: Vec<ArresteeRecord> = train.iter().map(|&i| records[i].clone()).collect();
    let mut models = Vec::new();
    let mut metrics = Vec::new();
    for &v in variants {
        let cfg = forest.to_config(derive_seed(seed, "forest", 0));
        let outcome = train_risk_model(&train_rows, v, &cfg)?;
        let e = Arc::new(outcome.ensemble);
        let scores: Vec<f64> = test.iter().map(|&i| e.predict(&records[i].features(v))).collect();
        let labels: Vec<u8> = test.iter().map(|&i| records[i].label).collect();
        metrics.push(ModelMetrics {
            variant: v.name().to_string(),
            auc: auc(&scores, &labels).unwrap_or(f64::NAN),
            accuracy: accuracy(&scores, &labels, 0.5),
            n_train: train.len(),
            n_test: test.len(),
            degenerate: outcome.degenerate,
        });
        models.push((v, e));
    }
    Ok((models, metrics, test))
}

impl Domain {
    pub fn load(cfg: &RunConfig) -> Result<Domain> {
        Ok(match &cfg.domain {
            DomainConfig::Synthetic { preset, start, uniform_starts } => {
                let preset = Preset::from_name(preset).expect("validated preset");
                let start = start.clone().unwrap_or_else(|| default_start(preset));
                // surface start problems now rather than per cell
                synthetic_mdp(preset, start.clone(), 0)?;
                Domain::Synthetic { preset, start, uniform: *uniform_starts }
            }
            DomainConfig::SimpleCredit { cache } => {
                let df: SharedDecision = match cache {
                    Some(p) => Arc::new(read_query_cache(&cfg.resolve(p), &questionnaire_schema())?),
                    None => Arc::new(SyntheticFico::standard()),
                };
                Domain::SimpleCredit { df }
            }
            DomainConfig::RealisticCredit { scenario, bucket_table } => {
                let scenario = read_scenario(&cfg.resolve(scenario))?;
                let mut preset = scenario.resolve_preset()?;
                if let Some(b) = bucket_table {
                    preset.buckets = read_bucket_table(&cfg.resolve(b))?;
                }
                preset.validate()?;
                Domain::RealisticCredit { df: Arc::new(SyntheticFico::standard()), preset, scenario }
            }
            DomainConfig::Recidivism { data, charges, forest, test_fraction, cohort_min_score, .. } => {
                let dict = ChargeDictionary::load(&cfg.resolve(charges))?;
                let loaded = load_compas(&cfg.resolve(data), &dict)?;
                let (models, metrics, test) =
                    train_models(&loaded.records, &cfg.variants(), forest, *test_fraction, cfg.seed)?;
                let full = match models.iter().find(|m| m.0 == ScoreVariant::Full) {
                    Some(m) => m.1.clone(),
                    None => {
                        let f = forest.to_config(derive_seed(cfg.seed, "forest", 0));
                        let (tr, _) = split_indices(loaded.records.len(), *test_fraction, cfg.seed);
                        let rows: Vec<ArresteeRecord> = tr.iter().map(|&i| loaded.records[i].clone()).collect();
                        Arc::new(train_risk_model(&rows, ScoreVariant::Full, &f)?.ensemble)
                    }
                };
                let risk = RiskDecision::new(full);
                let mut cohort = Vec::new();
                for &i in &test {
                    let r = &loaded.records[i];
                    if risk.score(&r.full_features())?.0 >= *cohort_min_score {
                        cohort.push(r.clone());
                    }
                }
                cohort.shuffle(&mut derive_rng(cfg.seed, "cohort", 0));
                let mut held_out: Vec<ArresteeRecord> = test.iter().map(|&i| loaded.records[i].clone()).collect();
                held_out.shuffle(&mut derive_rng(cfg.seed, "held_out", 0));
                Domain::Recidivism(Box::new(RecidivismSetup {
                    models,
                    metrics,
                    cohort,
                    held_out,
                    n_records: loaded.records.len(),
                    dropped: loaded.dropped,
                }))
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Domain::Synthetic { .. } => "synthetic",
            Domain::SimpleCredit { .. } => "simple_credit",
            Domain::RealisticCredit { .. } => "realistic_credit",
            Domain::Recidivism(_) => "recidivism",
        }
    }
}

/// Start `i` of a synthetic run: the configured start, or for `i >= 1` with
/// uniform starts a point drawn from the preset's box.
pub fn synthetic_start(preset: Preset, start: &[f64], uniform: bool, i: usize, seed: u64) -> Vec<f64> {
    if i == 0 || !uniform {
        return start.to_vec();
    }
    let mut rng = derive_rng(seed, "start", i as u64);
    preset.build().domain().iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect()
}

pub fn simple_credit_starts(n: usize, seed: u64) -> Vec<QuestionnaireState> {
    sample_questionnaires(n, derive_seed(seed, "starts", 0))
}

pub fn simple_credit_mdp(df: &SharedDecision, q: &QuestionnaireState, r: u32) -> Result<SimpleCreditMdp> {
    Ok(build_simple_credit_mdp(df.clone(), q, r)?)
}

pub fn realistic_mdp(df: &SharedDecision, preset: &RealisticPreset, sc: &Scenario, months: u32) -> Result<RealisticCreditMdp> {
    Ok(build_realistic_credit_mdp(df.clone(), preset.clone(), &sc.household, months)?)
}

pub fn recidivism_mdp(e: &Arc<TreeEnsemble>, v: ScoreVariant, rec: &ArresteeRecord, r: u32) -> Result<RecidivismMdp> {
    let m = build_recidivism_mdp(e.clone(), v, rec, r)?;
    debug_assert_eq!(m.initial_state().resources, r);
    Ok(m)
}
