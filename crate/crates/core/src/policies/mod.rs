//! Advice policies: state-to-action maps for a subject of an agency MDP.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mdp::{ActionId, AgencyMdp};
use crate::seed::rng_from_seed;
use crate::{Error, Result};

pub mod bfs;
pub mod gradient;
pub mod mcts;

pub use bfs::{bfs_optimal, bfs_optimal_with, BfsConfig, BfsPolicy, OptimalValueResult, DEFAULT_NODE_CAP};
pub use gradient::{gradient_action, Displacement, DisplacementActions, GradientPolicy};
pub use mcts::{mcts_search, mcts_search_detailed, Clock, MctsConfig, MctsPolicy, MctsResult, SearchBudget};

pub trait AdvicePolicy<M: AgencyMdp> {
    fn name(&self) -> String;

    /// Recommends an action at a nonterminal state. Randomized policies and
    /// searches draw from `rng`.
    fn advise(&self, mdp: &M, s: &M::State, rng: &mut ChaCha8Rng) -> Result<ActionId>;

    fn is_deterministic(&self) -> bool {
        true
    }
}

impl<M: AgencyMdp, P: AdvicePolicy<M> + ?Sized> AdvicePolicy<M> for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn advise(&self, mdp: &M, s: &M::State, rng: &mut ChaCha8Rng) -> Result<ActionId> {
        (**self).advise(mdp, s, rng)
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

/// Expected decision one step after taking `a`.
pub fn expected_next_decision<M: AgencyMdp>(mdp: &M, s: &M::State, a: ActionId) -> Result<f64> {
    let mut total = 0.0;
    for o in mdp.enumerate_outcomes(s, a)? {
        total += o.probability * mdp.decide(&o.state)?;
    }
    Ok(total)
}

/// Relative gap under which two expected decisions count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// One-step lookahead: the legal action with the best expected next
/// decision, lowest index on ties.
pub fn greedy_action<M: AgencyMdp>(mdp: &M, s: &M::State) -> Result<ActionId> {
    let values = one_step_values(mdp, s)?;
    let top = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * top.abs().max(1.0);
    Ok(values.iter().find(|v| v.1 >= top - tol).expect("legal_actions is nonempty").0)
}

pub fn random_action<M: AgencyMdp>(mdp: &M, s: &M::State, seed: u64) -> Result<ActionId> {
    draw_uniform(mdp, s, &mut rng_from_seed(seed))
}

fn draw_uniform<M: AgencyMdp>(mdp: &M, s: &M::State, rng: &mut ChaCha8Rng) -> Result<ActionId> {
    let legal = mdp.legal_actions(s)?;
    Ok(legal[rng.random_range(0..legal.len())])
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Greedy;

impl<M: AgencyMdp> AdvicePolicy<M> for Greedy {
    fn name(&self) -> String {
        String::from("greedy")
    }
    fn advise(&self, mdp: &M, s: &M::State, _: &mut ChaCha8Rng) -> Result<ActionId> {
        greedy_action(mdp, s)
    }
}

/// Uniform over legal actions. Its draws come from the rollout's policy
/// stream, so rollouts stay reproducible per seed.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomPolicy;

impl<M: AgencyMdp> AdvicePolicy<M> for RandomPolicy {
    fn name(&self) -> String {
        String::from("random")
    }
    fn advise(&self, mdp: &M, s: &M::State, rng: &mut ChaCha8Rng) -> Result<ActionId> {
        draw_uniform(mdp, s, rng)
    }
    fn is_deterministic(&self) -> bool {
        false
    }
}

type Selector<S> = Box<dyn Fn(&S) -> Option<ActionId> + Send + Sync>;

/// A domain rule such as "always pay in full". When the rule's action is
/// illegal the fallback rule is tried; if that fails too the policy errors.
pub struct FixedPolicy<S> {
    name: String,
    primary: Selector<S>,
    fallback: Option<Selector<S>>,
}

pub fn fixed_policy<S, F>(name: &str, selector: F) -> FixedPolicy<S>
where
    F: Fn(&S) -> Option<ActionId> + Send + Sync + 'static,
{
    FixedPolicy { name: String::from(name), primary: Box::new(selector), fallback: None }
}

impl<S> FixedPolicy<S> {
    /// Always proposes `action`.
    pub fn constant(name: &str, action: ActionId) -> Self
    where
        S: 'static,
    {
        fixed_policy(name, move |_: &S| Some(action))
    }

    pub fn with_fallback<F>(mut self, fallback: F) -> Self
    where
        F: Fn(&S) -> Option<ActionId> + Send + Sync + 'static,
    {
        self.fallback = Some(Box::new(fallback));
        self
    }

    /// Fallback to a fixed action.
    pub fn or_else(self, action: ActionId) -> Self
    where
        S: 'static,
    {
        self.with_fallback(move |_: &S| Some(action))
    }
}

impl<M: AgencyMdp> AdvicePolicy<M> for FixedPolicy<M::State> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn advise(&self, mdp: &M, s: &M::State, _: &mut ChaCha8Rng) -> Result<ActionId> {
        if mdp.is_terminal(s) {
            return Err(Error::TerminalState);
        }
        let primary = (self.primary)(s);
        if let Some(a) = primary.filter(|&a| mdp.is_legal(s, a)) {
            return Ok(a);
        }
        if let Some(a) = self.fallback.as_ref().and_then(|f| f(s)).filter(|&a| mdp.is_legal(s, a)) {
            return Ok(a);
        }
        // no legal choice: hand back the rule's own pick so the rollout reports it
        match primary {
            Some(a) => Ok(a),
            None => Err(Error::Unsupported(format!("policy {} has no action at {s:?}", self.name))),
        }
    }
}

/// Legal actions with their one-step expected decisions, in index order.
pub fn one_step_values<M: AgencyMdp>(mdp: &M, s: &M::State) -> Result<Vec<(ActionId, f64)>> {
    mdp.legal_actions(s)?
        .into_iter()
        .map(|a| expected_next_decision(mdp, s, a).map(|v| (a, v)))
        .collect()
}
