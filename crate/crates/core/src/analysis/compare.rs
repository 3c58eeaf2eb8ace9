use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::mdp::{mean_and_stderr, rollout, AgencyMdp};
use crate::policies::{bfs_optimal_with, AdvicePolicy, BfsConfig};
use crate::seed::derive_seed;
use crate::{Error, Result};

pub enum PolicyEntry<'a, M: AgencyMdp> {
    /// Exact optimal value from expectimax; cells over the node cap are skipped.
    Exact { name: String, config: BfsConfig },
    Rollout(&'a dyn AdvicePolicy<M>),
}

impl<M: AgencyMdp> PolicyEntry<'_, M> {
    pub fn bfs() -> Self {
        PolicyEntry::Exact { name: String::from("bfs"), config: BfsConfig::default() }
    }

    pub fn name(&self) -> String {
        match self {
            PolicyEntry::Exact { name, .. } => name.clone(),
            PolicyEntry::Rollout(p) => p.name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub policy: String,
    pub resources: u32,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    /// No value: the exact search ran out of budget or a start failed.
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub policy: String,
    pub resources: u32,
    pub start: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComparisonTable {
    /// Policy-major, resources ascending within a policy.
    pub rows: Vec<ComparisonRow>,
    pub failures: Vec<CellFailure>,
}

impl ComparisonTable {
    pub fn cell(&self, policy: &str, resources: u32) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.policy == policy && r.resources == resources)
    }
}

/// Evaluates every policy at every budget from the same `n_starts` start
/// states. `instance(i, r)` builds the MDP for start `i` with budget `r`.
/// Rollouts for start `i` share one seed across policies and budgets.
pub fn compare_policies<M, F>(
    instance: F,
    n_starts: usize,
    resources: &[u32],
    policies: &[PolicyEntry<'_, M>],
    seed: u64,
) -> Result<ComparisonTable>
where
    M: AgencyMdp,
    F: Fn(usize, u32) -> Result<M>,
{
    if n_starts == 0 || resources.is_empty() || policies.is_empty() {
        return Err(Error::InvalidParams(String::from("comparison needs starts, budgets and policies")));
    }
    let mut table = ComparisonTable::default();
    for p in policies {
        let name = p.name();
        for &r in resources {
            let mut values = Vec::with_capacity(n_starts);
            let mut skipped = false;
            for i in 0..n_starts {
                let mdp = instance(i, r)?;
                let s0 = mdp.initial_state();
                let v = match p {
                    PolicyEntry::Exact { config, .. } if !mdp.is_terminal(&s0) => {
                        bfs_optimal_with(&mdp, &s0, *config).map(|res| res.value)
                    }
                    PolicyEntry::Exact { .. } => mdp.decide(&s0),
                    PolicyEntry::Rollout(pol) => {
                        rollout(&mdp, *pol, &s0, derive_seed(seed, "rollout", i as u64)).map(|t| t.final_decision)
                    }
                };
                match v {
                    Ok(v) => values.push(v),
                    Err(Error::BudgetExceeded { .. }) => {
                        skipped = true;
                        break;
                    }
                    Err(e) => {
                        table.failures.push(CellFailure {
                            policy: name.clone(),
                            resources: r,
                            start: i,
                            message: e.to_string(),
                        });
                        skipped = true;
                        break;
                    }
                }
            }
            let (mean, stderr) = if skipped { (f64::NAN, f64::NAN) } else { mean_and_stderr(&values) };
            table.rows.push(ComparisonRow { policy: name.clone(), resources: r, mean, stderr, n: n_starts, skipped });
        }
    }
    if table.rows.iter().any(|r| !r.skipped && !r.mean.is_finite()) {
        return Err(Error::InvalidParams(String::from("non-finite cell value in comparison")));
    }
    Ok(table)
}
