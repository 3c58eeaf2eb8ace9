use alloc::vec::Vec;

use super::exact_policy_value;
use crate::mdp::AgencyMdp;
use crate::policies::{bfs_optimal, greedy_action, Greedy};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct GapRow {
    pub start: usize,
    pub resources: u32,
    pub v_bfs: f64,
    pub v_greedy: f64,
    /// `v_bfs - v_greedy`; never below `-1e-9`.
    pub gap: f64,
    /// The gap exceeds the tolerance: greedy advice is demonstrably suboptimal.
    pub witness: bool,
}

/// Optimal value against the exact value of following greedy advice, for
/// every start and budget. `instance(i, r)` builds the MDP for start `i`.
pub fn greedy_gap<M, F>(instance: F, n_starts: usize, resources: &[u32], tolerance: f64) -> Result<Vec<GapRow>>
where
    M: AgencyMdp,
    F: Fn(usize, u32) -> Result<M>,
{
    let mut rows = Vec::with_capacity(n_starts * resources.len());
    for i in 0..n_starts {
        for &r in resources {
            let mdp = instance(i, r)?;
            let s = mdp.initial_state();
            let v_greedy = exact_policy_value(&mdp, &Greedy, &s)?;
            let v_bfs = if mdp.is_terminal(&s) { v_greedy } else { bfs_optimal(&mdp, &s)?.value };
            let gap = v_bfs - v_greedy;
            debug_assert!(gap >= -1e-9, "expectimax below a policy value: {gap}");
            rows.push(GapRow { start: i, resources: r, v_bfs, v_greedy, gap, witness: gap > tolerance });
        }
    }
    Ok(rows)
}

/// Whether greedy's choice is among the expectimax Q-maximizers at `s`
/// (within `tol`). With one resource left the two must agree.
pub fn greedy_in_maximizers<M: AgencyMdp>(mdp: &M, s: &M::State, tol: f64) -> Result<bool> {
    let g = greedy_action(mdp, s)?;
    Ok(bfs_optimal(mdp, s)?.maximizers(tol).contains(&g))
}
