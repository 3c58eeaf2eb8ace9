//! Experiment analyses: policy comparison tables, group agency breakdowns
//! and the executable checks on when local advice is optimal.

use crate::mdp::{AgencyMdp, MdpState};
use crate::policies::AdvicePolicy;
use crate::seed::rng_from_seed;
use crate::Result;

mod compare;
mod gaps;
mod group;
mod straightness;

pub use compare::{compare_policies, CellFailure, ComparisonRow, ComparisonTable, PolicyEntry};
pub use gaps::{greedy_gap, greedy_in_maximizers, GapRow};
pub use group::{group_agency_report, GroupAgencyReport, GroupRow, MIN_GROUP_SIZE};
pub use straightness::{gradient_straightness_check, StraightnessConfig, StraightnessReport};

/// Exact expected final decision of a deterministic policy, by full
/// enumeration of transition outcomes.
pub fn exact_policy_value<M, P>(mdp: &M, policy: &P, s: &M::State) -> Result<f64>
where
    M: AgencyMdp,
    P: AdvicePolicy<M> + ?Sized,
{
    if mdp.is_terminal(s) {
        return mdp.decide(s);
    }
    // deterministic policies ignore the stream
    let a = policy.advise(mdp, s, &mut rng_from_seed(0))?;
    let mut v = 0.0;
    for o in mdp.enumerate_outcomes(s, a)? {
        debug_assert!(o.state.resources() <= s.resources());
        v += o.probability * exact_policy_value(mdp, policy, &o.state)?;
    }
    Ok(v)
}
