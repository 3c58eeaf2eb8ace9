//! Agency MDPs over black-box decision functions.
//!
//! A decision subject's options are framed as a finite-horizon Markov
//! decision process whose only reward is the decision received at the end.
//! The crate provides the decision functions (tree ensembles, query caches,
//! analytic surfaces), the MDP machinery (transitions, rollouts, value
//! estimates), advice policies (random, greedy, gradient-following, fixed
//! rules, exact expectimax and UCT search), the shipped domains and the
//! analysis routines used by the experiment harness.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, reports and
//! the command line live in the companion `agency` crate.

#![no_std]
// `!(x > 0.0)` style guards are there to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod decision_fn;
pub mod domains;
mod error;
pub(crate) mod math;
pub mod mdp;
pub mod policies;
pub mod seed;

pub use error::{Error, Result};
