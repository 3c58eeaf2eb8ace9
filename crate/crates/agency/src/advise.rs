//! One advice query: the recommended action at a start state, plus the
//! per-action values when the policy is exact search.

use std::path::Path;

use agency_core::domains::credit::{HouseholdState, QuestionnaireState};
use agency_core::domains::recidivism::{ArresteeRecord, ScoreVariant, CHARGE_TYPES, RACES, SEXES};
use agency_core::mdp::AgencyMdp;
use agency_core::policies::{bfs_optimal_with, GradientPolicy};
use agency_core::seed::rng_from_seed;
use serde::{Deserialize, Serialize};

use crate::config::{PolicyConfig, RunConfig};
use crate::domain::{realistic_mdp, recidivism_mdp, simple_credit_mdp, synthetic_mdp, Domain};
use crate::experiment::{bfs_config, common_policy};
use crate::io::{parse_degree, read_json};
use crate::{AgencyError, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Advice {
    pub policy: String,
    pub resources: u32,
    /// Decision at the start state, in the domain's reporting units.
    pub current: f64,
    /// `None` when the start state is terminal.
    pub action: Option<String>,
    /// Exact search only: expected final decision per legal action.
    pub q_values: Vec<(String, f64)>,
    pub value: Option<f64>,
}

/// Start-state file for a synthetic domain.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointState {
    features: Vec<f64>,
    resources: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerState {
    answers: [u32; 10],
    resources: u32,
}

/// Arrestee with named categories, as found in the CSV.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordState {
    #[serde(default)]
    variant: Option<String>,
    resources: u32,
    age: f64,
    sex: String,
    race: String,
    charge_type: String,
    charge_degree: String,
    juv_fel_count: u32,
    juv_misd_count: u32,
    juv_other_count: u32,
    priors_count: u32,
}

fn pick(names: &[&str], v: &str, what: &str) -> Result<u32> {
    names
        .iter()
        .position(|n| n.eq_ignore_ascii_case(v))
        .map(|i| i as u32)
        .ok_or_else(|| AgencyError::Config(format!("unknown {what} `{v}`")))
}

impl RecordState {
    fn record(&self) -> Result<ArresteeRecord> {
        let r = ArresteeRecord {
            age: self.age,
            sex: pick(&SEXES, &self.sex, "sex")?,
            race: pick(&RACES, &self.race, "race")?,
            charge_type: pick(&CHARGE_TYPES, &self.charge_type, "charge type")?,
            charge_degree: parse_degree(&self.charge_degree)
                .ok_or_else(|| AgencyError::Config(format!("unknown charge degree `{}`", self.charge_degree)))?,
            juv_fel_count: self.juv_fel_count,
            juv_misd_count: self.juv_misd_count,
            juv_other_count: self.juv_other_count,
            priors_count: self.priors_count,
            label: 0,
        };
        r.validate()?;
        Ok(r)
    }
}

fn ask<M: AgencyMdp + 'static>(
    mdp: &M,
    policy: &PolicyConfig,
    special: Option<Box<dyn agency_core::policies::AdvicePolicy<M>>>,
    seed: u64,
    display: impl Fn(f64) -> f64,
) -> Result<Advice> {
    let s = mdp.initial_state();
    let mut advice = Advice {
        policy: policy.name().to_string(),
        resources: agency_core::mdp::MdpState::resources(&s),
        current: display(mdp.decide(&s)?),
        action: None,
        q_values: Vec::new(),
        value: None,
    };
    if mdp.is_terminal(&s) {
        return Ok(advice);
    }
    match policy {
        PolicyConfig::Bfs { node_cap } => {
            let res = bfs_optimal_with(mdp, &s, bfs_config(*node_cap))?;
            advice.action = Some(mdp.label(res.best_action).to_string());
            advice.value = Some(display(res.value));
            advice.q_values = res.q_values.iter().map(|&(a, q)| (mdp.label(a).to_string(), display(q))).collect();
        }
        p => {
            let pol = common_policy::<M>(p)
                .or(special)
                .ok_or_else(|| AgencyError::Config(format!("policy `{}` does not apply to this domain", p.name())))?;
            let a = pol.advise(mdp, &s, &mut rng_from_seed(seed))?;
            advice.action = Some(mdp.label(a).to_string());
        }
    }
    Ok(advice)
}

fn need_resources(r: Option<u32>) -> Result<u32> {
    r.ok_or_else(|| AgencyError::Config("pass --resources or a state file".into()))
}

/// `state` is a domain-specific JSON start state; without one the domain's
/// default start is used. `resources` overrides the state's budget.
pub fn advise(
    cfg: &RunConfig,
    state: Option<&Path>,
    policy: &PolicyConfig,
    resources: Option<u32>,
    seed: u64,
) -> Result<Advice> {
    cfg.check_policy(policy)?;
    let domain = Domain::load(cfg)?;
    let cfg_err = |e: AgencyError| match e {
        AgencyError::Json { path, source } => AgencyError::Config(format!("{}: {source}", path.display())),
        e => e,
    };
    // a state file the domain rejects is bad input, not a runtime failure
    let bad_state = |e: AgencyError| match (e, state) {
        (AgencyError::Core(c), Some(p)) => AgencyError::Config(format!("{}: {c}", p.display())),
        (e, _) => e,
    };
    match &domain {
        Domain::Synthetic { preset, start, .. } => {
            let (x, r) = match state {
                Some(p) => {
                    let st: PointState = read_json(p).map_err(cfg_err)?;
                    (st.features, resources.unwrap_or(st.resources))
                }
                None => (start.clone(), need_resources(resources)?),
            };
            let m = synthetic_mdp(*preset, x, r).map_err(bad_state)?;
            let special = match policy {
                PolicyConfig::Gradient { epsilon } => {
                    Some(Box::new(GradientPolicy { epsilon: *epsilon, ..GradientPolicy::default() }) as _)
                }
                _ => None,
            };
            ask(&m, policy, special, seed, |v| v)
        }
        Domain::SimpleCredit { df } => {
            let (q, r) = match state {
                Some(p) => {
                    let st: AnswerState = read_json(p).map_err(cfg_err)?;
                    (QuestionnaireState { answers: st.answers }, resources.unwrap_or(st.resources))
                }
                None => (crate::domain::simple_credit_starts(1, cfg.seed)[0].clone(), need_resources(resources)?),
            };
            ask(&simple_credit_mdp(df, &q, r).map_err(bad_state)?, policy, None, seed, |v| v)
        }
        Domain::RealisticCredit { df, preset, scenario } => {
            let mut sc = scenario.clone();
            if let Some(p) = state {
                let h: HouseholdState = read_json(p).map_err(cfg_err)?;
                h.validate().map_err(|e| bad_state(e.into()))?;
                sc.months = h.months_remaining;
                sc.household = h;
            }
            let months = resources.unwrap_or(sc.months);
            let m = realistic_mdp(df, preset, &sc, months).map_err(bad_state)?;
            let special = match policy {
                PolicyConfig::PayMax => Some(Box::new(m.pay_max_policy()) as _),
                _ => None,
            };
            ask(&m, policy, special, seed, |v| v)
        }
        Domain::Recidivism(setup) => {
            let (rec, variant, r) = match state {
                Some(p) => {
                    let st: RecordState = read_json(p).map_err(cfg_err)?;
                    let v = match st.variant.as_deref() {
                        None | Some("full") => ScoreVariant::Full,
                        Some("blind") => ScoreVariant::Blind,
                        Some(o) => return Err(AgencyError::Config(format!("unknown score variant `{o}`"))),
                    };
                    (st.record().map_err(bad_state)?, v, resources.unwrap_or(st.resources))
                }
                None => {
                    let rec = setup
                        .cohort
                        .first()
                        .cloned()
                        .ok_or_else(|| AgencyError::Failed("recidivism cohort is empty".into()))?;
                    (rec, setup.models[0].0, need_resources(resources)?)
                }
            };
            let e = setup
                .model(variant)
                .ok_or_else(|| AgencyError::Config(format!("variant `{}` is not configured", variant.name())))?;
            let m = recidivism_mdp(e, variant, &rec, r).map_err(bad_state)?;
            ask(&m, policy, None, seed, agency_core::domains::recidivism::score_of)
        }
    }
}
