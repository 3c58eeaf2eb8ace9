//! Decision functions: positive-valued maps from feature vectors to the
//! decision a subject receives, evaluable only through queries.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod cache;
pub mod forest;
pub mod synthetic;

pub use cache::QueryCache;
pub use forest::{train_forest, ForestConfig, Node, Tree, TreeEnsemble, TrainOutcome};
pub use synthetic::{make_synthetic, Preset, Synthetic, SyntheticKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    /// Real-valued. `min`/`max` only scale distances, they do not bound values.
    Numeric { min: f64, max: f64 },
    /// Integer levels `0..levels`.
    Ordinal { levels: u32 },
    /// Integer codes `0..cardinality`.
    Categorical { cardinality: u32 },
}

impl FeatureKind {
    /// Width used to scale the feature onto `[0, 1]`.
    pub fn span(&self) -> f64 {
        let w = match *self {
            FeatureKind::Numeric { min, max } => max - min,
            FeatureKind::Ordinal { levels } => levels.saturating_sub(1) as f64,
            FeatureKind::Categorical { cardinality } => cardinality.saturating_sub(1) as f64,
        };
        if w > 0.0 {
            w
        } else {
            1.0
        }
    }

    fn lower(&self) -> f64 {
        match *self {
            FeatureKind::Numeric { min, .. } => min,
            _ => 0.0,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, FeatureKind::Numeric { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl Feature {
    pub fn numeric(name: &str, min: f64, max: f64) -> Self {
        Feature { name: name.to_string(), kind: FeatureKind::Numeric { min, max } }
    }

    pub fn ordinal(name: &str, levels: u32) -> Self {
        Feature { name: name.to_string(), kind: FeatureKind::Ordinal { levels } }
    }

    pub fn categorical(name: &str, cardinality: u32) -> Self {
        Feature { name: name.to_string(), kind: FeatureKind::Categorical { cardinality } }
    }
}

/// Ordered feature declarations shared by a decision function and its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    features: Vec<Feature>,
}

impl Schema {
    pub fn new(features: Vec<Feature>) -> Self {
        Schema { features }
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn all_numeric(&self) -> bool {
        self.features.iter().all(|f| f.kind.is_numeric())
    }

    /// Checks length and, for ordinal and categorical features, that each
    /// entry is an integer code within range.
    pub fn validate(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.features.len() {
            return Err(Error::SchemaLength { expected: self.features.len(), got: values.len() });
        }
        for (f, &v) in self.features.iter().zip(values) {
            let ok = match f.kind {
                FeatureKind::Numeric { .. } => v.is_finite(),
                FeatureKind::Ordinal { levels: n } | FeatureKind::Categorical { cardinality: n } => {
                    v >= 0.0 && v < n as f64 && v == crate::math::floor(v)
                }
            };
            if !ok {
                return Err(Error::FeatureOutOfRange { name: f.name.clone(), value: v });
            }
        }
        Ok(())
    }

    /// Feature `i` of `v` mapped onto `[0, 1]` by the declared range.
    pub fn normalized(&self, i: usize, v: f64) -> f64 {
        let k = &self.features[i].kind;
        (v - k.lower()) / k.span()
    }
}

/// Values of one subject's decision features, in schema order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }
}

impl Deref for FeatureVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for FeatureVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v)
    }
}

/// A black-box decision rule `D: X -> R+`.
///
/// Implementors provide [`value`](DecisionFunction::value); callers go
/// through [`evaluate`](DecisionFunction::evaluate), which checks the input
/// against the schema and the output for positivity.
pub trait DecisionFunction: Send + Sync {
    fn schema(&self) -> &Schema;

    /// Unchecked evaluation.
    fn value(&self, x: &[f64]) -> f64;

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.schema().validate(x)?;
        let v = self.value(x);
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::NonPositiveDecision(v))
        }
    }
}

impl<T: DecisionFunction + ?Sized> DecisionFunction for Arc<T> {
    fn schema(&self) -> &Schema {
        (**self).schema()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
}

impl<T: DecisionFunction + ?Sized> DecisionFunction for &T {
    fn schema(&self) -> &Schema {
        (**self).schema()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
}

pub type SharedDecision = Arc<dyn DecisionFunction>;

/// Decision function backed by a closure; handy for fixtures.
pub struct FnDecision<F> {
    schema: Schema,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnDecision<F> {
    pub fn new(schema: Schema, f: F) -> Self {
        FnDecision { schema, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> DecisionFunction for FnDecision<F> {
    fn schema(&self) -> &Schema {
        &self.schema
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Central finite-difference gradient of `df` at `x`.
pub fn fd_gradient(df: &dyn DecisionFunction, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let xi = probe[i];
        probe[i] = xi + h;
        let up = df.value(&probe);
        probe[i] = xi - h;
        let down = df.value(&probe);
        probe[i] = xi;
        g.push((up - down) / (2.0 * h));
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mixed() -> Schema {
        Schema::new(vec![
            Feature::numeric("age", 18.0, 98.0),
            Feature::ordinal("degree", 5),
            Feature::categorical("race", 3),
        ])
    }

    #[test]
    fn validate_rejects_wrong_length_and_ranges() {
        let s = mixed();
        assert!(s.validate(&[30.0, 2.0, 1.0]).is_ok());
        assert_eq!(s.validate(&[30.0, 2.0]), Err(Error::SchemaLength { expected: 3, got: 2 }));
        assert!(matches!(s.validate(&[30.0, 5.0, 1.0]), Err(Error::FeatureOutOfRange { .. })));
        assert!(matches!(s.validate(&[30.0, 1.5, 1.0]), Err(Error::FeatureOutOfRange { .. })));
        assert!(matches!(s.validate(&[f64::NAN, 1.0, 1.0]), Err(Error::FeatureOutOfRange { .. })));
        // numeric bounds only scale distances
        assert!(s.validate(&[200.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn normalization_uses_declared_span() {
        let s = mixed();
        assert_eq!(s.normalized(0, 58.0), 0.5);
        assert_eq!(s.normalized(1, 4.0), 1.0);
        assert_eq!(s.normalized(2, 1.0), 0.5);
    }

    #[test]
    fn evaluate_enforces_positivity() {
        let df = FnDecision::new(Schema::new(vec![Feature::numeric("x", 0.0, 1.0)]), |x| x[0]);
        assert_eq!(df.evaluate(&[0.5]), Ok(0.5));
        assert_eq!(df.evaluate(&[0.0]), Err(Error::NonPositiveDecision(0.0)));
        assert_eq!(df.evaluate(&[-1.0]), Err(Error::NonPositiveDecision(-1.0)));
    }
}
