//! Agency MDPs: a subject's state, the actions open to them, the outcomes
//! those actions lead to, and a reward paid only when the episode ends.

use alloc::borrow::Cow;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decision_fn::{DecisionFunction, FeatureVector};
use crate::policies::AdvicePolicy;
use crate::seed::derive_rng;
use crate::{math, Error, Result};

/// Index into a domain's declared action list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Canonical, hashable identity of a state, used for memoization.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(pub Vec<i64>);

/// Real values are quantized at this resolution in state keys.
pub const KEY_RESOLUTION: f64 = 1e-9;

pub fn quantize(v: f64) -> i64 {
    math::round(v / KEY_RESOLUTION) as i64
}

pub trait MdpState: Clone + fmt::Debug {
    /// Remaining actions, time units or months.
    fn resources(&self) -> u32;
    fn key(&self) -> StateKey;
}

/// General-purpose subject state: decision features, a resource budget and
/// a fixed set of named domain scalars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgencyState {
    pub features: FeatureVector,
    pub resources: u32,
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
}

impl AgencyState {
    pub fn new(features: impl Into<FeatureVector>, resources: u32) -> Self {
        AgencyState { features: features.into(), resources, extras: BTreeMap::new() }
    }
}

impl MdpState for AgencyState {
    fn resources(&self) -> u32 {
        self.resources
    }

    fn key(&self) -> StateKey {
        let mut k = Vec::with_capacity(self.features.len() + self.extras.len() + 1);
        k.extend(self.features.iter().map(|&v| quantize(v)));
        // BTreeMap iterates in key order
        k.extend(self.extras.values().map(|&v| quantize(v)));
        k.push(self.resources as i64);
        StateKey(k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome<S> {
    pub state: S,
    pub probability: f64,
}

impl<S> Outcome<S> {
    pub fn certain(state: S) -> Self {
        Outcome { state, probability: 1.0 }
    }
}

/// The decision subject's MDP. Implementors supply the legal-action filter
/// and the transition model; the provided methods add the contract checks.
pub trait AgencyMdp {
    type State: MdpState;

    fn decision(&self) -> &dyn DecisionFunction;

    /// Declared actions; [`ActionId`] indexes this list.
    fn action_labels(&self) -> &[String];

    fn initial_state(&self) -> Self::State;

    /// The decision features `I_x(s)`.
    fn features<'s>(&self, s: &'s Self::State) -> Cow<'s, [f64]>;

    fn is_terminal(&self, s: &Self::State) -> bool {
        s.resources() == 0
    }

    /// Appends the legal actions at a nonterminal `s` in index order.
    fn push_legal(&self, s: &Self::State, out: &mut Vec<ActionId>);

    /// Outcome distribution of a legal action.
    fn transition(&self, s: &Self::State, a: ActionId) -> Vec<Outcome<Self::State>>;

    fn is_deterministic(&self) -> bool {
        true
    }

    fn label(&self, a: ActionId) -> &str {
        self.action_labels().get(a.0).map(String::as_str).unwrap_or("<unknown>")
    }

    fn legal_actions(&self, s: &Self::State) -> Result<Vec<ActionId>> {
        if self.is_terminal(s) {
            return Err(Error::TerminalState);
        }
        let mut out = Vec::new();
        self.push_legal(s, &mut out);
        if out.is_empty() {
            return Err(Error::Unsupported(format!("nonterminal state without legal actions: {s:?}")));
        }
        Ok(out)
    }

    fn is_legal(&self, s: &Self::State, a: ActionId) -> bool {
        if self.is_terminal(s) {
            return false;
        }
        let mut out = Vec::new();
        self.push_legal(s, &mut out);
        out.contains(&a)
    }

    fn enumerate_outcomes(&self, s: &Self::State, a: ActionId) -> Result<Vec<Outcome<Self::State>>> {
        if !self.is_legal(s, a) {
            return Err(Error::IllegalAction { action: String::from(self.label(a)), state: format!("{s:?}") });
        }
        Ok(self.transition(s, a))
    }

    /// `D(I_x(s))`, whether or not `s` is terminal.
    fn decide(&self, s: &Self::State) -> Result<f64> {
        self.decision().evaluate(&self.features(s))
    }
}

/// Sparse terminal reward: the decision at terminal states, zero elsewhere.
pub fn reward<M: AgencyMdp>(mdp: &M, s: &M::State) -> Result<f64> {
    if mdp.is_terminal(s) {
        mdp.decide(s)
    } else {
        Ok(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S> {
    pub states: Vec<S>,
    pub actions: Vec<ActionId>,
    pub final_decision: f64,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn final_state(&self) -> &S {
        self.states.last().expect("trajectory holds at least the start state")
    }
}

pub(crate) fn sample_outcome<S>(outcomes: Vec<Outcome<S>>, rng: &mut ChaCha8Rng) -> S {
    if outcomes.len() == 1 {
        return outcomes.into_iter().next().unwrap().state;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let last = outcomes.len() - 1;
    for (i, o) in outcomes.into_iter().enumerate() {
        acc += o.probability;
        if u < acc || i == last {
            return o.state;
        }
    }
    unreachable!()
}

/// Rolls `policy` out from `s0` until a terminal state. Outcome sampling and
/// the policy draw from separate streams derived from `seed`.
pub fn rollout<M, P>(mdp: &M, policy: &P, s0: &M::State, seed: u64) -> Result<Trajectory<M::State>>
where
    M: AgencyMdp,
    P: AdvicePolicy<M> + ?Sized,
{
    let mut world = derive_rng(seed, "outcome", 0);
    let mut choices = derive_rng(seed, "policy", 0);
    let mut states = alloc::vec![s0.clone()];
    let mut actions = Vec::new();
    let mut s = s0.clone();
    let mut step = 0;
    while !mdp.is_terminal(&s) {
        let a = policy.advise(mdp, &s, &mut choices)?;
        if !mdp.is_legal(&s, a) {
            return Err(Error::IllegalPolicyAction { step, action: String::from(mdp.label(a)) });
        }
        let next = sample_outcome(mdp.transition(&s, a), &mut world);
        if next.resources() >= s.resources() && !mdp.is_terminal(&next) {
            return Err(Error::NoProgress { step });
        }
        actions.push(a);
        states.push(next.clone());
        s = next;
        step += 1;
    }
    let final_decision = mdp.decide(&s)?;
    Ok(Trajectory { states, actions, final_decision })
}

#[derive(Clone, Debug)]
pub struct PolicyValueEstimate<S> {
    pub mean: f64,
    /// Standard error of the mean; zero when a single evaluation suffices.
    pub stderr: f64,
    pub n_samples: usize,
    /// Rollouts actually performed.
    pub evaluations: usize,
    pub trajectories: Vec<Trajectory<S>>,
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if xs.iter().all(|x| *x == xs[0]) {
        return (xs[0], 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, math::sqrt(var / n as f64))
}

/// Monte-Carlo estimate of the expected final decision under `policy`.
/// Deterministic MDPs under deterministic policies need one rollout.
pub fn estimate_policy_value<M, P>(
    mdp: &M,
    policy: &P,
    s0: &M::State,
    n_samples: usize,
    seed: u64,
) -> Result<PolicyValueEstimate<M::State>>
where
    M: AgencyMdp,
    P: AdvicePolicy<M> + ?Sized,
{
    if n_samples == 0 {
        return Err(Error::InvalidParams(String::from("n_samples must be at least 1")));
    }
    let runs = if mdp.is_deterministic() && policy.is_deterministic() { 1 } else { n_samples };
    let mut trajectories = Vec::with_capacity(runs);
    for i in 0..runs {
        trajectories.push(rollout(mdp, policy, s0, crate::seed::derive_seed(seed, "sample", i as u64))?);
    }
    let finals: Vec<f64> = trajectories.iter().map(|t| t.final_decision).collect();
    let (mean, stderr) = mean_and_stderr(&finals);
    Ok(PolicyValueEstimate { mean, stderr, n_samples, evaluations: runs, trajectories })
}
