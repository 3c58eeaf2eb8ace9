//! UCT Monte-Carlo tree search with uniform-random rollouts.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use super::AdvicePolicy;
use crate::mdp::{sample_outcome, ActionId, AgencyMdp, Outcome};
use crate::seed::rng_from_seed;
use crate::{math, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchBudget {
    Iterations(u64),
    WallClockMs(u64),
}

impl SearchBudget {
    pub fn amount(&self) -> u64 {
        match *self {
            SearchBudget::Iterations(n) | SearchBudget::WallClockMs(n) => n,
        }
    }
}

/// Millisecond time source for wall-clock budgets; `core` has none.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> f64;
}

#[derive(Clone)]
pub struct MctsConfig {
    pub budget: SearchBudget,
    pub exploration: f64,
    pub clock: Option<Arc<dyn Clock>>,
}

impl MctsConfig {
    pub fn iterations(n: u64) -> Self {
        MctsConfig { budget: SearchBudget::Iterations(n), exploration: core::f64::consts::SQRT_2, clock: None }
    }

    pub fn wall_clock(ms: u64, clock: Arc<dyn Clock>) -> Self {
        MctsConfig { budget: SearchBudget::WallClockMs(ms), exploration: core::f64::consts::SQRT_2, clock: Some(clock) }
    }
}

impl core::fmt::Debug for MctsConfig {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MctsConfig")
            .field("budget", &self.budget)
            .field("exploration", &self.exploration)
            .field("clock", &self.clock.is_some())
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootStat {
    pub action: ActionId,
    pub visits: u64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MctsResult {
    pub action: ActionId,
    pub iterations: u64,
    /// One entry per expanded root action, in action-index order.
    pub root: Vec<RootStat>,
    pub tree_size: usize,
}

struct Edge<S> {
    action: ActionId,
    visits: u64,
    total: f64,
    outcomes: Vec<Outcome<S>>,
    children: Vec<Option<usize>>,
}

struct Node<S> {
    state: S,
    terminal: bool,
    untried: Vec<ActionId>,
    edges: Vec<Edge<S>>,
    visits: u64,
}

struct Search<'m, M: AgencyMdp> {
    mdp: &'m M,
    nodes: Vec<Node<M::State>>,
    c: f64,
    lo: f64,
    hi: f64,
    rng: ChaCha8Rng,
}

impl<'m, M: AgencyMdp> Search<'m, M> {
    fn add_node(&mut self, state: M::State) -> Result<usize> {
        let terminal = self.mdp.is_terminal(&state);
        let untried = if terminal { Vec::new() } else { self.mdp.legal_actions(&state)? };
        self.nodes.push(Node { state, terminal, untried, edges: Vec::new(), visits: 0 });
        Ok(self.nodes.len() - 1)
    }

    fn pick_outcome(&mut self, probs: &[f64]) -> usize {
        if probs.len() == 1 {
            return 0;
        }
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    fn select_edge(&self, n: usize) -> usize {
        let node = &self.nodes[n];
        let ln_n = math::ln(node.visits.max(1) as f64);
        let span = self.hi - self.lo;
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in node.edges.iter().enumerate() {
            let mean = e.total / e.visits as f64;
            let q = if span > 0.0 { (mean - self.lo) / span } else { 0.5 };
            let score = q + self.c * math::sqrt(ln_n / e.visits as f64);
            let better = match best {
                None => true,
                Some((j, b)) => score > b || (score == b && e.action < node.edges[j].action),
            };
            if better {
                best = Some((i, score));
            }
        }
        best.expect("fully expanded node has edges").0
    }

    /// Follows the outcome of edge `e` at node `n`, creating the child if
    /// needed. Returns the child and whether it is new.
    fn descend(&mut self, n: usize, e: usize) -> Result<(usize, bool)> {
        let probs: Vec<f64> = self.nodes[n].edges[e].outcomes.iter().map(|o| o.probability).collect();
        let k = self.pick_outcome(&probs);
        if let Some(c) = self.nodes[n].edges[e].children[k] {
            return Ok((c, false));
        }
        let state = self.nodes[n].edges[e].outcomes[k].state.clone();
        let c = self.add_node(state)?;
        self.nodes[n].edges[e].children[k] = Some(c);
        Ok((c, true))
    }

    fn rollout(&mut self, mut s: M::State) -> Result<f64> {
        while !self.mdp.is_terminal(&s) {
            let legal = self.mdp.legal_actions(&s)?;
            let a = legal[self.rng.random_range(0..legal.len())];
            s = sample_outcome(self.mdp.transition(&s, a), &mut self.rng);
        }
        self.mdp.decide(&s)
    }

    fn iterate(&mut self) -> Result<()> {
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut n = 0;
        let value = loop {
            if self.nodes[n].terminal {
                break self.mdp.decide(&self.nodes[n].state)?;
            }
            if !self.nodes[n].untried.is_empty() {
                let j = self.rng.random_range(0..self.nodes[n].untried.len());
                let a = self.nodes[n].untried.remove(j);
                let outcomes = self.mdp.transition(&self.nodes[n].state, a);
                let children = alloc::vec![None; outcomes.len()];
                self.nodes[n].edges.push(Edge { action: a, visits: 0, total: 0.0, outcomes, children });
                let e = self.nodes[n].edges.len() - 1;
                path.push((n, e));
                let (c, _) = self.descend(n, e)?;
                break self.rollout(self.nodes[c].state.clone())?;
            }
            let e = self.select_edge(n);
            path.push((n, e));
            let (c, fresh) = self.descend(n, e)?;
            if fresh {
                break self.rollout(self.nodes[c].state.clone())?;
            }
            n = c;
        };
        self.lo = self.lo.min(value);
        self.hi = self.hi.max(value);
        for (n, e) in path {
            self.nodes[n].visits += 1;
            let edge = &mut self.nodes[n].edges[e];
            edge.visits += 1;
            edge.total += value;
        }
        Ok(())
    }
}

pub fn mcts_search<M: AgencyMdp>(mdp: &M, s: &M::State, cfg: &MctsConfig, seed: u64) -> Result<ActionId> {
    mcts_search_detailed(mdp, s, cfg, seed).map(|r| r.action)
}

pub fn mcts_search_detailed<M: AgencyMdp>(
    mdp: &M,
    s: &M::State,
    cfg: &MctsConfig,
    seed: u64,
) -> Result<MctsResult> {
    if cfg.budget.amount() == 0 {
        return Err(Error::InvalidParams(String::from("search budget must be positive")));
    }
    if !(cfg.exploration >= 0.0) {
        return Err(Error::InvalidParams(String::from("exploration constant must be nonnegative")));
    }
    if mdp.is_terminal(s) {
        return Err(Error::TerminalState);
    }
    let mut search = Search {
        mdp,
        nodes: Vec::new(),
        c: cfg.exploration,
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
        rng: rng_from_seed(seed),
    };
    search.add_node(s.clone())?;
    let mut iterations = 0u64;
    match cfg.budget {
        SearchBudget::Iterations(n) => {
            while iterations < n {
                search.iterate()?;
                iterations += 1;
            }
        }
        SearchBudget::WallClockMs(ms) => {
            let clock = cfg
                .clock
                .as_ref()
                .ok_or_else(|| Error::InvalidParams(String::from("wall-clock budget needs a clock")))?;
            let deadline = clock.now_ms() + ms as f64;
            loop {
                search.iterate()?;
                iterations += 1;
                if clock.now_ms() >= deadline {
                    break;
                }
            }
        }
    }
    let mut root: Vec<RootStat> = search.nodes[0]
        .edges
        .iter()
        .map(|e| RootStat { action: e.action, visits: e.visits, mean: e.total / e.visits as f64 })
        .collect();
    root.sort_by_key(|r| r.action);
    let mut best = &root[0];
    for r in &root[1..] {
        if r.visits > best.visits {
            best = r;
        }
    }
    Ok(MctsResult { action: best.action, iterations, tree_size: search.nodes.len(), root })
}

/// Runs a fresh search at every state, seeded from the policy stream.
#[derive(Clone, Debug)]
pub struct MctsPolicy {
    pub config: MctsConfig,
}

impl MctsPolicy {
    pub fn iterations(n: u64) -> Self {
        MctsPolicy { config: MctsConfig::iterations(n) }
    }
}

impl<M: AgencyMdp> AdvicePolicy<M> for MctsPolicy {
    fn name(&self) -> String {
        String::from("mcts")
    }

    fn advise(&self, mdp: &M, s: &M::State, rng: &mut ChaCha8Rng) -> Result<ActionId> {
        mcts_search(mdp, s, &self.config, rng.next_u64())
    }

    fn is_deterministic(&self) -> bool {
        false
    }
}
