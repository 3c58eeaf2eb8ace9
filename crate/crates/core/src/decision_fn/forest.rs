//! Random forests of Gini CART trees over binary labels.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{FeatureVector, Schema};
use crate::seed::derive_rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Binary tree stored in preorder; node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }
}

/// Mean-aggregated tree ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeEnsemble {
    pub schema: Schema,
    pub trees: Vec<Tree>,
}

impl TreeEnsemble {
    /// Structural checks: indices in range, children after parents, leaves in `[0, 1]`.
    pub fn new(schema: Schema, trees: Vec<Tree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidParams("ensemble has no trees".to_string()));
        }
        for (t, tree) in trees.iter().enumerate() {
            if tree.nodes.is_empty() {
                return Err(Error::InvalidParams(format!("tree {t} has no nodes")));
            }
            for (i, n) in tree.nodes.iter().enumerate() {
                match *n {
                    Node::Leaf { value } if !(0.0..=1.0).contains(&value) => {
                        return Err(Error::InvalidParams(format!("tree {t} node {i}: leaf value {value} outside [0, 1]")));
                    }
                    Node::Split { feature, threshold, left, right } => {
                        let n_nodes = tree.nodes.len();
                        if feature >= schema.len() || !threshold.is_finite() {
                            return Err(Error::InvalidParams(format!("tree {t} node {i}: bad split on feature {feature}")));
                        }
                        if left <= i || right <= i || left >= n_nodes || right >= n_nodes || left == right {
                            return Err(Error::InvalidParams(format!("tree {t} node {i}: bad child index")));
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(TreeEnsemble { schema, trees })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of rows each tree sees, drawn without replacement.
    pub bag_fraction: f64,
    /// Features tried per split; defaults to `ceil(sqrt(n_features))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_trees: 100, max_depth: 8, min_leaf: 5, bag_fraction: 0.8, max_features: None, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub ensemble: TreeEnsemble,
    /// Every label was the same class, so the ensemble is constant.
    pub degenerate: bool,
}

pub fn train_forest(
    schema: &Schema,
    rows: &[FeatureVector],
    labels: &[u8],
    config: &ForestConfig,
) -> Result<TrainOutcome> {
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(Error::InvalidParams("dataset must be nonempty with one label per row".to_string()));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::InvalidParams("labels must be 0 or 1".to_string()));
    }
    if config.n_trees == 0 || config.min_leaf == 0 || !(config.bag_fraction > 0.0 && config.bag_fraction <= 1.0) {
        return Err(Error::InvalidParams("n_trees, min_leaf and bag_fraction must be positive".to_string()));
    }
    for (i, r) in rows.iter().enumerate() {
        schema.validate(r).map_err(|e| Error::InvalidRow { row: i + 1, reason: e.to_string() })?;
    }
    let p = schema.len();
    let mtry = config
        .max_features
        .unwrap_or_else(|| crate::math::sqrt(p as f64).ceil_int())
        .clamp(1, p.max(1));
    let n = rows.len();
    let bag = ((config.bag_fraction * n as f64).ceil_int()).clamp(1, n);

    let mut trees = Vec::with_capacity(config.n_trees);
    for t in 0..config.n_trees {
        let mut rng = derive_rng(config.seed, "tree", t as u64);
        let mut idx: Vec<usize> = (0..n).collect();
        if bag < n {
            for i in 0..bag {
                let j = rng.random_range(i..n);
                idx.swap(i, j);
            }
            idx.truncate(bag);
            idx.sort_unstable();
        }
        let mut g = Grower { rows, labels, mtry, p, max_depth: config.max_depth, min_leaf: config.min_leaf, rng: &mut rng, nodes: Vec::new() };
        g.grow(&mut idx, 0);
        trees.push(Tree { nodes: g.nodes });
    }
    let degenerate = labels.iter().all(|&y| y == labels[0]);
    Ok(TrainOutcome { ensemble: TreeEnsemble::new(schema.clone(), trees)?, degenerate })
}

trait CeilInt {
    fn ceil_int(self) -> usize;
}

impl CeilInt for f64 {
    fn ceil_int(self) -> usize {
        libm::ceil(self) as usize
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let q = pos as f64 / n as f64;
    2.0 * q * (1.0 - q)
}

const IMPURITY_EPS: f64 = 1e-12;

struct Grower<'a> {
    rows: &'a [FeatureVector],
    labels: &'a [u8],
    mtry: usize,
    p: usize,
    max_depth: usize,
    min_leaf: usize,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.labels[i] == 1).count();
        let here = self.nodes.len();
        let value = pos as f64 / n as f64;
        self.nodes.push(Node::Leaf { value });
        if depth >= self.max_depth || pos == 0 || pos == n || n < 2 * self.min_leaf {
            return here;
        }
        let Some((feature, threshold)) = self.best_split(idx, gini(pos, n)) else {
            return here;
        };
        // stable partition keeps row order inside children
        let (mut l, mut r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.rows[i][feature] <= threshold);
        let left = self.grow(&mut l, depth + 1);
        let right = self.grow(&mut r, depth + 1);
        self.nodes[here] = Node::Split { feature, threshold, left, right };
        here
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let mut fs: Vec<usize> = (0..self.p).collect();
        if self.mtry < self.p {
            for i in 0..self.mtry {
                let j = self.rng.random_range(i..self.p);
                fs.swap(i, j);
            }
            fs.truncate(self.mtry);
            fs.sort_unstable();
        }
        fs
    }

    /// Lowest weighted Gini; ties go to the lower feature, then lower threshold.
    fn best_split(&mut self, idx: &[usize], parent: f64) -> Option<(usize, f64)> {
        let n = idx.len();
        let total_pos = idx.iter().filter(|&&i| self.labels[i] == 1).count();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for f in self.candidate_features() {
            order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]).then(a.cmp(&b)));
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += self.labels[order[k - 1]] as usize;
                let lo = self.rows[order[k - 1]][f];
                let hi = self.rows[order[k]][f];
                if lo == hi || k < self.min_leaf || n - k < self.min_leaf {
                    continue;
                }
                let imp = (k as f64 * gini(left_pos, k) + (n - k) as f64 * gini(total_pos - left_pos, n - k)) / n as f64;
                if best.is_none_or(|(b, _, _)| imp < b - IMPURITY_EPS) {
                    best = Some((imp, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        match best {
            Some((imp, f, t)) if imp < parent - IMPURITY_EPS => Some((f, t)),
            _ => None,
        }
    }
}

/// Area under the ROC curve, ties counted half. `None` when only one class is present.
pub fn auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    // average ranks over tied groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

pub fn accuracy(scores: &[f64], labels: &[u8], threshold: f64) -> f64 {
    let hits = scores.iter().zip(labels).filter(|(s, &y)| (**s >= threshold) == (y == 1)).count();
    hits as f64 / scores.len().max(1) as f64
}

/// Seeded train/test split; returns `(train, test)` row indices in ascending order.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = derive_rng(seed, "holdout", 0);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    let n_test = ((test_fraction * n as f64).ceil_int()).min(n);
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision_fn::Feature;
    use alloc::vec;
    use rand::SeedableRng;

    fn schema(p: usize) -> Schema {
        Schema::new((0..p).map(|i| Feature::numeric(&format!("f{i}"), -10.0, 10.0)).collect())
    }

    fn random_data(n: usize, p: usize, seed: u64) -> (Vec<FeatureVector>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<FeatureVector> = (0..n)
            .map(|_| FeatureVector::new((0..p).map(|_| rng.random_range(0..6) as f64).collect()))
            .collect();
        let labels = rows
            .iter()
            .map(|r| u8::from(r[0] + r[1] * 0.5 + rng.random_range(0.0..3.0) > 4.0))
            .collect();
        (rows, labels)
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let rows: Vec<FeatureVector> = (-5..5).map(|v| FeatureVector::new(vec![v as f64, 1.0])).collect();
        let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] > 0.0)).collect();
        let cfg = ForestConfig { n_trees: 5, max_depth: 1, min_leaf: 1, bag_fraction: 1.0, max_features: Some(2), seed: 3 };
        let out = train_forest(&schema(2), &rows, &labels, &cfg).unwrap();
        let preds: Vec<f64> = rows.iter().map(|r| out.ensemble.predict(r)).collect();
        assert_eq!(accuracy(&preds, &labels, 0.5), 1.0);
        // midpoint threshold between 0 and 1
        assert_eq!(out.ensemble.trees[0].nodes[0], Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2 });
    }

    #[test]
    fn constant_labels_give_constant_zero() {
        let (rows, _) = random_data(50, 3, 1);
        let labels = vec![0u8; 50];
        let out = train_forest(&schema(3), &rows, &labels, &ForestConfig { n_trees: 4, ..Default::default() }).unwrap();
        assert!(out.degenerate);
        for r in &rows {
            assert_eq!(out.ensemble.predict(r), 0.0);
        }
        assert_eq!(out.ensemble.predict(&[9.0, -9.0, 0.0]), 0.0);
    }

    #[test]
    fn same_seed_same_forest_and_depth_bound() {
        let (rows, labels) = random_data(300, 4, 2);
        let cfg = ForestConfig { n_trees: 10, max_depth: 4, min_leaf: 2, bag_fraction: 0.7, max_features: None, seed: 11 };
        let a = train_forest(&schema(4), &rows, &labels, &cfg).unwrap().ensemble;
        let b = train_forest(&schema(4), &rows, &labels, &cfg).unwrap().ensemble;
        assert_eq!(a, b);
        assert!(a.max_depth() <= 4);
        let c = train_forest(&schema(4), &rows, &labels, &ForestConfig { seed: 12, ..cfg }).unwrap().ensemble;
        assert_ne!(a, c);
    }

    #[test]
    fn tree_order_does_not_change_predictions() {
        let (rows, labels) = random_data(200, 3, 5);
        let e = train_forest(&schema(3), &rows, &labels, &ForestConfig { n_trees: 7, ..Default::default() }).unwrap().ensemble;
        let mut rev = e.clone();
        rev.trees.reverse();
        for r in &rows {
            assert!((e.predict(r) - rev.predict(r)).abs() < 1e-12);
        }
    }

    /// Independent CART: exhaustive threshold scan with the same tie rules, no
    /// sorting tricks, built depth-first.
    #[allow(clippy::needless_range_loop)]
    fn reference_cart(rows: &[FeatureVector], labels: &[u8], idx: Vec<usize>, depth: usize, max_depth: usize, min_leaf: usize, out: &mut Vec<Node>) -> usize {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| labels[i] == 1).count();
        let here = out.len();
        out.push(Node::Leaf { value: pos as f64 / n as f64 });
        if depth >= max_depth || pos == 0 || pos == n || n < 2 * min_leaf {
            return here;
        }
        let parent = gini(pos, n);
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..rows[0].len() {
            let mut vals: Vec<f64> = idx.iter().map(|&i| rows[i][f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = w[0] + (w[1] - w[0]) / 2.0;
                let left: Vec<usize> = idx.iter().copied().filter(|&i| rows[i][f] <= t).collect();
                let k = left.len();
                if k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let lp = left.iter().filter(|&&i| labels[i] == 1).count();
                let imp = (k as f64 * gini(lp, k) + (n - k) as f64 * gini(pos - lp, n - k)) / n as f64;
                if best.is_none_or(|(b, _, _)| imp < b - IMPURITY_EPS) {
                    best = Some((imp, f, t));
                }
            }
        }
        let Some((imp, f, t)) = best else { return here };
        if imp >= parent - IMPURITY_EPS {
            return here;
        }
        let l: Vec<usize> = idx.iter().copied().filter(|&i| rows[i][f] <= t).collect();
        let r: Vec<usize> = idx.iter().copied().filter(|&i| rows[i][f] > t).collect();
        let left = reference_cart(rows, labels, l, depth + 1, max_depth, min_leaf, out);
        let right = reference_cart(rows, labels, r, depth + 1, max_depth, min_leaf, out);
        out[here] = Node::Split { feature: f, threshold: t, left, right };
        here
    }

    #[test]
    fn single_full_tree_matches_reference_cart() {
        for seed in 0..4 {
            let (rows, labels) = random_data(120, 3, 100 + seed);
            let cfg = ForestConfig { n_trees: 1, max_depth: 5, min_leaf: 3, bag_fraction: 1.0, max_features: Some(3), seed };
            let got = train_forest(&schema(3), &rows, &labels, &cfg).unwrap().ensemble;
            let mut nodes = Vec::new();
            reference_cart(&rows, &labels, (0..rows.len()).collect(), 0, 5, 3, &mut nodes);
            assert_eq!(got.trees[0].nodes, nodes, "seed {seed}");
        }
    }

    #[test]
    fn auc_reference_cases() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]), Some(1.0));
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[0, 0, 1, 1]), Some(0.0));
        assert_eq!(auc(&[0.5, 0.5, 0.5, 0.5], &[0, 1, 0, 1]), Some(0.5));
        // brute-force pair count: pos {0.4, 0.7}, neg {0.3, 0.4, 0.9}
        // pairs: (0.4>0.3)=1, (0.4=0.4)=0.5, (0.4<0.9)=0, (0.7>0.3)=1, (0.7>0.4)=1, (0.7<0.9)=0 -> 3.5/6
        let a = auc(&[0.4, 0.7, 0.3, 0.4, 0.9], &[1, 1, 0, 0, 0]).unwrap();
        assert!((a - 3.5 / 6.0).abs() < 1e-12);
        assert_eq!(auc(&[0.1, 0.2], &[1, 1]), None);
    }

    #[test]
    fn split_is_a_partition() {
        let (train, test) = split_indices(101, 0.2, 9);
        assert_eq!(test.len(), 21);
        let mut all = [train.clone(), test.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
        assert_eq!(split_indices(101, 0.2, 9), (train, test));
    }

    #[test]
    fn rejects_malformed_ensembles() {
        let s = schema(2);
        let bad_leaf = Tree { nodes: vec![Node::Leaf { value: 1.5 }] };
        assert!(TreeEnsemble::new(s.clone(), vec![bad_leaf]).is_err());
        let bad_feature = Tree { nodes: vec![Node::Split { feature: 2, threshold: 0.0, left: 1, right: 2 }, Node::Leaf { value: 0.0 }, Node::Leaf { value: 1.0 }] };
        assert!(TreeEnsemble::new(s.clone(), vec![bad_feature]).is_err());
        let cycle = Tree { nodes: vec![Node::Split { feature: 0, threshold: 0.0, left: 0, right: 1 }, Node::Leaf { value: 1.0 }] };
        assert!(TreeEnsemble::new(s, vec![cycle]).is_err());
    }
}
