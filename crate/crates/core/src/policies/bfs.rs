//! Exact finite-horizon expectimax with memoization on canonical state keys.

use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;
use rand_chacha::ChaCha8Rng;

use super::AdvicePolicy;
use crate::mdp::{ActionId, AgencyMdp, MdpState, StateKey};
use crate::{Error, Result};

pub const DEFAULT_NODE_CAP: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BfsConfig {
    /// Nonterminal states that may be expanded before giving up.
    pub node_cap: usize,
    /// Relative tolerance under which two Q-values count as tied.
    pub tie_tolerance: f64,
}

impl Default for BfsConfig {
    fn default() -> Self {
        BfsConfig { node_cap: DEFAULT_NODE_CAP, tie_tolerance: super::TIE_TOLERANCE }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalValueResult {
    pub best_action: ActionId,
    /// `V*(s)`, the best expected final decision.
    pub value: f64,
    /// Exact Q-value of every legal action, in index order.
    pub q_values: Vec<(ActionId, f64)>,
    pub nodes_expanded: usize,
}

impl OptimalValueResult {
    /// All actions whose Q-value is within `tol` of `V*`.
    pub fn maximizers(&self, tol: f64) -> Vec<ActionId> {
        self.q_values.iter().filter(|(_, q)| *q >= self.value - tol).map(|(a, _)| *a).collect()
    }

    pub fn q_value(&self, a: ActionId) -> Option<f64> {
        self.q_values.iter().find(|(b, _)| *b == a).map(|(_, q)| *q)
    }
}

/// Expected final decision and expected sum of the decisions passed through
/// on the way. The second component only orders actions whose final values
/// tie: among equally good plans the one that improves the subject's
/// standing earliest is preferred.
#[derive(Clone, Copy, Debug)]
struct Worth {
    last: f64,
    interim: f64,
}

struct Solver<'m, M: AgencyMdp> {
    mdp: &'m M,
    cfg: BfsConfig,
    memo: HashMap<StateKey, Worth>,
    expanded: usize,
    deepest: u32,
}

impl<M: AgencyMdp> Solver<'_, M> {
    fn worth(&mut self, s: &M::State, depth: u32) -> Result<Worth> {
        let key = s.key();
        if let Some(w) = self.memo.get(&key) {
            return Ok(*w);
        }
        let w = if self.mdp.is_terminal(s) {
            Worth { last: self.mdp.decide(s)?, interim: 0.0 }
        } else {
            let qs = self.expand(s, depth)?;
            let i = self.choose(&qs);
            Worth { last: max_last(&qs), interim: self.mdp.decide(s)? + qs[i].1.interim }
        };
        self.memo.insert(key, w);
        Ok(w)
    }

    fn expand(&mut self, s: &M::State, depth: u32) -> Result<Vec<(ActionId, Worth)>> {
        if self.expanded >= self.cfg.node_cap {
            return Err(Error::BudgetExceeded { cap: self.cfg.node_cap, depth: self.deepest });
        }
        self.expanded += 1;
        self.deepest = self.deepest.max(depth);
        let actions = self.mdp.legal_actions(s)?;
        let mut qs = Vec::with_capacity(actions.len());
        for a in actions {
            let mut q = Worth { last: 0.0, interim: 0.0 };
            for o in self.mdp.transition(s, a) {
                let w = self.worth(&o.state, depth + 1)?;
                q.last += o.probability * w.last;
                q.interim += o.probability * w.interim;
            }
            qs.push((a, q));
        }
        Ok(qs)
    }

    fn choose(&self, qs: &[(ActionId, Worth)]) -> usize {
        let top = max_last(qs);
        let tol = self.cfg.tie_tolerance * top.abs().max(1.0);
        let mut best: Option<usize> = None;
        for (i, (_, q)) in qs.iter().enumerate() {
            if q.last < top - tol {
                continue;
            }
            if best.is_none_or(|b| q.interim > qs[b].1.interim + tol) {
                best = Some(i);
            }
        }
        best.expect("at least one action attains the maximum")
    }
}

fn max_last(qs: &[(ActionId, Worth)]) -> f64 {
    qs.iter().map(|(_, q)| q.last).fold(f64::NEG_INFINITY, f64::max)
}

pub fn bfs_optimal<M: AgencyMdp>(mdp: &M, s: &M::State) -> Result<OptimalValueResult> {
    bfs_optimal_with(mdp, s, BfsConfig::default())
}

pub fn bfs_optimal_with<M: AgencyMdp>(mdp: &M, s: &M::State, cfg: BfsConfig) -> Result<OptimalValueResult> {
    if mdp.is_terminal(s) {
        return Err(Error::TerminalState);
    }
    let mut solver = Solver { mdp, cfg, memo: HashMap::new(), expanded: 0, deepest: 0 };
    let qs = solver.expand(s, 0)?;
    let i = solver.choose(&qs);
    Ok(OptimalValueResult {
        best_action: qs[i].0,
        value: max_last(&qs),
        q_values: qs.iter().map(|(a, q)| (*a, q.last)).collect(),
        nodes_expanded: solver.expanded,
    })
}

/// Re-solves exactly at every state it is asked about.
#[derive(Clone, Copy, Debug, Default)]
pub struct BfsPolicy {
    pub config: BfsConfig,
}

impl<M: AgencyMdp> AdvicePolicy<M> for BfsPolicy {
    fn name(&self) -> String {
        String::from("bfs")
    }
    fn advise(&self, mdp: &M, s: &M::State, _: &mut ChaCha8Rng) -> Result<ActionId> {
        Ok(bfs_optimal_with(mdp, s, self.config)?.best_action)
    }
}
