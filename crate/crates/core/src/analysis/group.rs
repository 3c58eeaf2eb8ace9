use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::decision_fn::TreeEnsemble;
use crate::domains::recidivism::{build_recidivism_mdp, score_of, ArresteeRecord, ScoreVariant, RACES, SEXES};
use crate::mdp::{rollout, AgencyMdp};
use crate::policies::{MctsConfig, MctsPolicy};
use crate::seed::derive_seed;
use crate::Result;

/// Groups smaller than this are reported with a flag.
pub const MIN_GROUP_SIZE: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupRow {
    /// `race/sex` of the initial record.
    pub group: String,
    pub variant: ScoreVariant,
    pub k: u32,
    /// Mean risk score (1-10, lower is better) before any action.
    pub mean_before: f64,
    /// Mean risk score after following search advice for `k` steps.
    pub mean_after: f64,
    pub n: usize,
    pub small_sample: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroupAgencyReport {
    /// Ordered by variant, then `k`, then group name.
    pub rows: Vec<GroupRow>,
}

impl GroupAgencyReport {
    pub fn row(&self, group: &str, variant: ScoreVariant, k: u32) -> Option<&GroupRow> {
        self.rows.iter().find(|r| r.group == group && r.variant == variant && r.k == k)
    }
}

pub fn group_name(r: &ArresteeRecord) -> String {
    format!("{}/{}", RACES[r.race as usize], SEXES[r.sex as usize])
}

/// Mean risk before and after `k` steps of MCTS advice, per race x sex
/// group and score variant. Group membership comes from the initial record.
pub fn group_agency_report(
    models: &[(ScoreVariant, Arc<TreeEnsemble>)],
    records: &[ArresteeRecord],
    ks: &[u32],
    mcts: &MctsConfig,
    seed: u64,
) -> Result<GroupAgencyReport> {
    let policy = MctsPolicy { config: mcts.clone() };
    let mut rows = Vec::new();
    for (variant, ensemble) in models {
        for &k in ks {
            let mut acc: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
            for (i, rec) in records.iter().enumerate() {
                let mdp = build_recidivism_mdp(ensemble.clone(), *variant, rec, k)?;
                let s0 = mdp.initial_state();
                let before = score_of(mdp.decide(&s0)?);
                let after = if k == 0 {
                    before
                } else {
                    let t = rollout(&mdp, &policy, &s0, derive_seed(seed, "group", i as u64))?;
                    score_of(t.final_decision)
                };
                let e = acc.entry(group_name(rec)).or_insert((0.0, 0.0, 0));
                e.0 += before;
                e.1 += after;
                e.2 += 1;
            }
            for (group, (b, a, n)) in acc {
                rows.push(GroupRow {
                    group,
                    variant: *variant,
                    k,
                    mean_before: b / n as f64,
                    mean_after: a / n as f64,
                    n,
                    small_sample: n < MIN_GROUP_SIZE,
                });
            }
        }
    }
    Ok(GroupAgencyReport { rows })
}
