//! Nearest-neighbour decision function over a stored set of queried points.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use super::{DecisionFunction, FeatureVector, Schema};
use crate::{Error, Result};

/// Replays a scored service: each query receives the decision of the nearest
/// cached point under weighted L1 distance on `[0, 1]`-scaled features.
/// Equidistant points resolve to the lowest row.
#[derive(Clone, Debug)]
pub struct QueryCache {
    schema: Schema,
    weights: Vec<f64>,
    points: Vec<FeatureVector>,
    decisions: Vec<f64>,
    // row-major normalized copy of `points`
    scaled: Vec<f64>,
}

impl QueryCache {
    /// Rows are numbered from 1 in errors, matching data rows of a cache file.
    pub fn new(schema: Schema, points: Vec<(FeatureVector, f64)>) -> Result<Self> {
        let w = alloc::vec![1.0; schema.len()];
        Self::with_weights(schema, points, w)
    }

    pub fn with_weights(schema: Schema, points: Vec<(FeatureVector, f64)>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParams("query cache needs at least one point".to_string()));
        }
        if weights.len() != schema.len() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParams("one nonnegative weight per feature required".to_string()));
        }
        let d = schema.len();
        let mut scaled = Vec::with_capacity(points.len() * d);
        let mut xs = Vec::with_capacity(points.len());
        let mut ys = Vec::with_capacity(points.len());
        for (i, (x, y)) in points.into_iter().enumerate() {
            let row = i + 1;
            schema
                .validate(&x)
                .map_err(|e| Error::InvalidRow { row, reason: e.to_string() })?;
            if !(y.is_finite() && y > 0.0) {
                return Err(Error::InvalidRow { row, reason: format!("decision {y} is not positive") });
            }
            scaled.extend(x.iter().enumerate().map(|(j, &v)| schema.normalized(j, v)));
            xs.push(x);
            ys.push(y);
        }
        Ok(QueryCache { schema, weights, points: xs, decisions: ys, scaled })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (&FeatureVector, f64)> {
        self.points.iter().zip(self.decisions.iter().copied())
    }

    /// Index of the nearest cached point.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let d = self.schema.len();
        let q: Vec<f64> = x.iter().enumerate().map(|(j, &v)| self.schema.normalized(j, v)).collect();
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, row) in self.scaled.chunks_exact(d.max(1)).enumerate() {
            let dist: f64 = row
                .iter()
                .zip(&q)
                .zip(&self.weights)
                .map(|((a, b), w)| w * (a - b).abs())
                .sum();
            if dist < best_dist {
                best_dist = dist;
                best = i;
            }
        }
        best
    }
}

impl DecisionFunction for QueryCache {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.decisions[self.nearest(x)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision_fn::Feature;
    use alloc::vec;

    fn schema() -> Schema {
        Schema::new(vec![Feature::numeric("a", 0.0, 10.0), Feature::ordinal("b", 5)])
    }

    fn pts(rows: &[([f64; 2], f64)]) -> Vec<(FeatureVector, f64)> {
        rows.iter().map(|(x, y)| (FeatureVector::new(x.to_vec()), *y)).collect()
    }

    #[test]
    fn single_point_answers_everything() {
        let c = QueryCache::new(schema(), pts(&[([3.0, 1.0], 7.0)])).unwrap();
        for q in [[0.0, 0.0], [10.0, 4.0], [3.0, 1.0], [55.0, 2.0]] {
            assert_eq!(c.evaluate(&q), Ok(7.0));
        }
    }

    #[test]
    fn exact_match_and_tie_break() {
        let c = QueryCache::new(schema(), pts(&[([0.0, 0.0], 1.0), ([5.0, 2.0], 2.0), ([10.0, 0.0], 3.0)])).unwrap();
        assert_eq!(c.evaluate(&[5.0, 2.0]), Ok(2.0));
        // (5, 0) is 0.5 from rows 1 and 3 in scaled units and 1.0 from row 2
        let c2 = QueryCache::new(schema(), pts(&[([0.0, 0.0], 1.0), ([5.0, 4.0], 2.0), ([10.0, 0.0], 3.0)])).unwrap();
        assert_eq!(c2.nearest(&[5.0, 0.0]), 0);
        assert_eq!(c2.evaluate(&[5.0, 0.0]), Ok(1.0));
    }

    #[test]
    fn rejects_nonpositive_decision_with_row() {
        let rows = pts(&[
            ([0.0, 0.0], 1.0),
            ([1.0, 0.0], 1.0),
            ([2.0, 0.0], 1.0),
            ([3.0, 0.0], 1.0),
            ([4.0, 0.0], 0.0),
        ]);
        let err = QueryCache::new(schema(), rows).unwrap_err();
        assert!(matches!(err, Error::InvalidRow { row: 5, .. }), "{err:?}");
    }

    #[test]
    fn rejects_empty() {
        assert!(QueryCache::new(schema(), Vec::new()).is_err());
    }

    #[test]
    fn weights_change_the_metric() {
        let rows = pts(&[([0.0, 4.0], 1.0), ([10.0, 0.0], 2.0)]);
        let q = [2.0, 0.0];
        let plain = QueryCache::new(schema(), rows.clone()).unwrap();
        assert_eq!(plain.value(&q), 2.0);
        let heavy_a = QueryCache::with_weights(schema(), rows, vec![10.0, 1.0]).unwrap();
        assert_eq!(heavy_a.value(&q), 1.0);
    }
}
