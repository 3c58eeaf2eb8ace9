//! Gradient-following advice: step a fixed L2 distance along the estimated
//! gradient of the decision function.

use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use super::AdvicePolicy;
use crate::decision_fn::{fd_gradient, DecisionFunction};
use crate::mdp::{ActionId, AgencyMdp};
use crate::{math, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Displacement {
    pub vector: Vec<f64>,
    /// The estimated gradient vanished; `vector` is zero.
    pub stationary: bool,
}

pub fn gradient_action(df: &dyn DecisionFunction, x: &[f64], epsilon: f64, fd_step: f64) -> Result<Displacement> {
    if !(epsilon > 0.0 && fd_step > 0.0) {
        return Err(Error::InvalidParams(String::from("epsilon and fd_step must be positive")));
    }
    if let Some(f) = df.schema().features().iter().find(|f| !f.kind.is_numeric()) {
        return Err(Error::Unsupported(alloc::format!(
            "gradient advice needs numeric features, `{}` is not",
            f.name
        )));
    }
    df.schema().validate(x)?;
    let g = fd_gradient(df, x, fd_step);
    let n = math::norm(&g);
    if !(n > 0.0) || !n.is_finite() {
        return Ok(Displacement { vector: alloc::vec![0.0; x.len()], stationary: true });
    }
    Ok(Displacement { vector: g.iter().map(|v| epsilon * v / n).collect(), stationary: false })
}

/// MDPs whose actions move the feature vector by a fixed displacement.
pub trait DisplacementActions: AgencyMdp {
    fn displacement(&self, a: ActionId) -> &[f64];
}

/// Picks the legal action best aligned (by cosine) with the gradient step.
/// A vanishing gradient selects a zero-displacement action when one is
/// legal, else the lowest-indexed legal action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientPolicy {
    pub epsilon: f64,
    pub fd_step: f64,
}

impl Default for GradientPolicy {
    fn default() -> Self {
        GradientPolicy { epsilon: 1.0, fd_step: 1e-5 }
    }
}

impl<M: DisplacementActions> AdvicePolicy<M> for GradientPolicy {
    fn name(&self) -> String {
        String::from("gradient")
    }

    fn advise(&self, mdp: &M, s: &M::State, _: &mut ChaCha8Rng) -> Result<ActionId> {
        let legal = mdp.legal_actions(s)?;
        let step = gradient_action(mdp.decision(), &mdp.features(s), self.epsilon, self.fd_step)?;
        if step.stationary {
            let still = legal.iter().copied().find(|&a| math::norm(mdp.displacement(a)) == 0.0);
            return Ok(still.unwrap_or(legal[0]));
        }
        let mut best: Option<(ActionId, f64)> = None;
        for a in legal {
            let d = mdp.displacement(a);
            let n = math::norm(d);
            let cos = if n > 0.0 { math::dot(d, &step.vector) / n } else { 0.0 };
            if best.is_none_or(|(_, b)| cos > b + 1e-12) {
                best = Some((a, cos));
            }
        }
        Ok(best.expect("legal actions are nonempty").0)
    }
}
