//! Explicit finite MDPs given as transition tables. Small fixtures and the
//! random layered family used to check search against exact values.

use alloc::borrow::Cow;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::decision_fn::{DecisionFunction, Feature, Schema};
use crate::mdp::{ActionId, AgencyMdp, MdpState, Outcome, StateKey};
use crate::seed::derive_rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TableState {
    pub id: usize,
    pub resources: u32,
}

impl MdpState for TableState {
    fn resources(&self) -> u32 {
        self.resources
    }
    fn key(&self) -> StateKey {
        StateKey(vec![self.id as i64, self.resources as i64])
    }
}

/// Decision value looked up by state id.
#[derive(Clone, Debug)]
pub struct TableDecision {
    schema: Schema,
    values: Vec<f64>,
}

impl DecisionFunction for TableDecision {
    fn schema(&self) -> &Schema {
        &self.schema
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.values[x[0] as usize]
    }
}

/// `edges[state][action]` lists `(next state, probability)`; every action
/// costs one resource.
#[derive(Clone, Debug)]
pub struct TableMdp {
    df: TableDecision,
    labels: Vec<String>,
    edges: Vec<Vec<Vec<(usize, f64)>>>,
    start: TableState,
}

impl TableMdp {
    pub fn new(values: Vec<f64>, edges: Vec<Vec<Vec<(usize, f64)>>>, start: usize, resources: u32) -> Result<Self> {
        let n = values.len();
        if n == 0 || edges.len() != n || start >= n {
            return Err(Error::InvalidParams(String::from("table needs one value and one edge list per state")));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParams(String::from("table decision values must be positive")));
        }
        let width = edges.iter().map(Vec::len).max().unwrap_or(0);
        for (s, acts) in edges.iter().enumerate() {
            for (a, outs) in acts.iter().enumerate() {
                let total: f64 = outs.iter().map(|o| o.1).sum();
                let bad_p = outs.iter().any(|o| !(o.1 > 0.0 && o.1 <= 1.0) || o.0 >= n);
                if outs.is_empty() || bad_p || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParams(format!("state {s} action {a}: malformed outcome list")));
                }
            }
        }
        let df = TableDecision { schema: Schema::new(vec![Feature::categorical("state", n as u32)]), values };
        let labels = (0..width).map(|a| format!("a{a}")).collect();
        Ok(TableMdp { df, labels, edges, start: TableState { id: start, resources } })
    }

    /// Random layered MDP: `depth` layers after the root, up to `width`
    /// states per layer, `actions` choices per state, decisions drawn from
    /// the integers `1..=10`. With `stochastic`, each action has two
    /// outcomes.
    pub fn random_layered(seed: u64, depth: u32, width: usize, actions: usize, stochastic: bool) -> Self {
        let mut rng = derive_rng(seed, "table", 0);
        let mut layers: Vec<Vec<usize>> = vec![vec![0]];
        let mut n = 1;
        for _ in 0..depth {
            let w = rng.random_range(1..=width);
            layers.push((n..n + w).collect());
            n += w;
        }
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(1..=10) as f64).collect();
        let mut edges = vec![Vec::new(); n];
        for l in 0..depth as usize {
            let next = &layers[l + 1];
            for &s in &layers[l] {
                for _ in 0..actions {
                    let a = next[rng.random_range(0..next.len())];
                    let outs = if stochastic && next.len() > 1 {
                        let b = next[rng.random_range(0..next.len())];
                        let p = rng.random_range(1..=9) as f64 / 10.0;
                        if a == b {
                            vec![(a, 1.0)]
                        } else {
                            vec![(a, p), (b, 1.0 - p)]
                        }
                    } else {
                        vec![(a, 1.0)]
                    };
                    edges[s].push(outs);
                }
            }
        }
        Self::new(values, edges, 0, depth).expect("generated table is well formed")
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Distinct states reachable from the start, the start included.
    pub fn reachable_states(&self) -> usize {
        let mut seen = hashbrown::HashSet::new();
        let mut stack = vec![self.start];
        while let Some(s) = stack.pop() {
            if !seen.insert(s) || self.is_terminal(&s) {
                continue;
            }
            let mut legal = Vec::new();
            self.push_legal(&s, &mut legal);
            for a in legal {
                stack.extend(self.transition(&s, a).into_iter().map(|o| o.state));
            }
        }
        seen.len()
    }
}

impl AgencyMdp for TableMdp {
    type State = TableState;

    fn decision(&self) -> &dyn DecisionFunction {
        &self.df
    }

    fn action_labels(&self) -> &[String] {
        &self.labels
    }

    fn initial_state(&self) -> TableState {
        self.start
    }

    fn features<'s>(&self, s: &'s TableState) -> Cow<'s, [f64]> {
        Cow::Owned(vec![s.id as f64])
    }

    /// States without outgoing edges end the episode early.
    fn is_terminal(&self, s: &TableState) -> bool {
        s.resources == 0 || self.edges[s.id].is_empty()
    }

    fn push_legal(&self, s: &TableState, out: &mut Vec<ActionId>) {
        out.extend((0..self.edges[s.id].len()).map(ActionId));
    }

    fn transition(&self, s: &TableState, a: ActionId) -> Vec<Outcome<TableState>> {
        self.edges[s.id][a.0]
            .iter()
            .map(|&(id, p)| Outcome { state: TableState { id, resources: s.resources - 1 }, probability: p })
            .collect()
    }

    fn is_deterministic(&self) -> bool {
        self.edges.iter().flatten().all(|o| o.len() == 1)
    }
}
