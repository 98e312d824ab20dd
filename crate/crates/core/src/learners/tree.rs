//! CART decision trees.
//!
//! Classification trees split on weighted Gini impurity; the regression trees
//! used inside gradient boosting split on squared error. Samples go left when
//! `x[feature] <= threshold`.
//!
//! Ties are resolved deterministically: among equally good splits the lowest
//! feature index wins, then the lowest threshold. A node is split whenever a
//! split exists that separates its samples, even if the impurity does not
//! improve, so an unbounded tree on distinct rows always reaches pure leaves.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// Gains closer than this are treated as equal.
const GAIN_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Count(c) => c,
        };
        m.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    /// Draw one uniform threshold per candidate feature instead of scanning
    /// every midpoint (extremely randomized trees).
    pub random_thresholds: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
            random_thresholds: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted tree. Classification leaves hold a class index stored as `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    /// Unnormalized weighted impurity decrease per feature.
    pub impurity_decrease: Vec<f64>,
}

impl Tree {
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict_class(&self, x: &[f64]) -> usize {
        self.leaf_value(x) as usize
    }

    pub fn is_single_leaf(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    /// Impurity-decrease importances normalized to sum 1; all zeros for a single leaf.
    pub fn normalized_importances(&self) -> Vec<f64> {
        normalize(&self.impurity_decrease)
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

pub(crate) fn normalize(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter().map(|x| x / total).collect()
    } else {
        vec![0.0; v.len()]
    }
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn better(candidate: &Split, best: &Option<Split>) -> bool {
    match best {
        None => true,
        Some(b) => candidate.gain > b.gain + GAIN_TIE,
    }
}

/// Midpoint threshold between two distinct sorted values, never equal to `hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + 0.5 * (hi - lo);
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Order in which candidate features are examined at a node: the first
/// `max_features` are drawn at random and sorted; the rest follow (sorted) and
/// are only consulted when none of the drawn features can split the node.
fn candidate_features(n_features: usize, m: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    if m >= n_features {
        return ((0..n_features).collect(), Vec::new());
    }
    let mut all: Vec<usize> = (0..n_features).collect();
    all.shuffle(rng);
    let mut head = all[..m].to_vec();
    let mut tail = all[m..].to_vec();
    head.sort_unstable();
    tail.sort_unstable();
    (head, tail)
}

struct ClassificationBuilder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    w: &'a [f64],
    n_classes: usize,
    params: &'a TreeParams,
    n_try: usize,
    nodes: Vec<Node>,
    impurity_decrease: Vec<f64>,
}

impl ClassificationBuilder<'_> {
    fn class_totals(&self, idx: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.n_classes];
        for &i in idx {
            counts[self.y[i]] += self.w[i];
        }
        counts
    }

    fn best_split_on(&self, idx: &[usize], feature: usize, parent: f64, total: f64, rng: &mut ChaCha8Rng) -> Option<Split> {
        let mut vals: Vec<(f64, usize)> = idx.iter().map(|&i| (self.x.get(i, feature), i)).collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (lo, hi) = (vals[0].0, vals[vals.len() - 1].0);
        if lo >= hi {
            return None;
        }

        if self.params.random_thresholds {
            let threshold = rng.random_range(lo..hi);
            let mut left = vec![0.0; self.n_classes];
            for &(v, i) in &vals {
                if v > threshold {
                    break;
                }
                left[self.y[i]] += self.w[i];
            }
            let parent_counts = self.class_totals(idx);
            let wl: f64 = left.iter().sum();
            let right: Vec<f64> = parent_counts.iter().zip(&left).map(|(p, l)| p - l).collect();
            let wr = total - wl;
            let gain = parent - (wl / total) * gini(&left, wl) - (wr / total) * gini(&right, wr);
            return Some(Split {
                feature,
                threshold,
                gain,
            });
        }

        let parent_counts = self.class_totals(idx);
        let mut left = vec![0.0; self.n_classes];
        let mut wl = 0.0;
        let mut best: Option<Split> = None;
        for k in 0..vals.len() - 1 {
            let (v, i) = vals[k];
            left[self.y[i]] += self.w[i];
            wl += self.w[i];
            let next = vals[k + 1].0;
            if v >= next {
                continue;
            }
            let wr = total - wl;
            let right: Vec<f64> = parent_counts.iter().zip(&left).map(|(p, l)| p - l).collect();
            let gain = parent - (wl / total) * gini(&left, wl) - (wr / total) * gini(&right, wr);
            let cand = Split {
                feature,
                threshold: midpoint(v, next),
                gain,
            };
            if better(&cand, &best) {
                best = Some(cand);
            }
        }
        best
    }

    fn leaf(&mut self, counts: &[f64]) -> usize {
        // argmax with lowest class index on ties
        let mut class = 0;
        for (k, &c) in counts.iter().enumerate() {
            if c > counts[class] {
                class = k;
            }
        }
        self.nodes.push(Node::Leaf { value: class as f64 });
        self.nodes.len() - 1
    }

    fn build(&mut self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let counts = self.class_totals(idx);
        let total: f64 = counts.iter().sum();
        let impurity = gini(&counts, total);
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if impurity <= 0.0 || idx.len() < self.params.min_samples_split || depth_capped || total <= 0.0 {
            return self.leaf(&counts);
        }

        let (head, tail) = candidate_features(self.x.cols(), self.n_try, rng);
        let mut best: Option<Split> = None;
        for &f in &head {
            if let Some(s) = self.best_split_on(idx, f, impurity, total, rng) {
                if better(&s, &best) {
                    best = Some(s);
                }
            }
        }
        if best.is_none() {
            for &f in &tail {
                if let Some(s) = self.best_split_on(idx, f, impurity, total, rng) {
                    best = Some(s);
                    break;
                }
            }
        }
        let Some(split) = best else {
            return self.leaf(&counts);
        };

        self.impurity_decrease[split.feature] += total * split.gain.max(0.0);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: f64::NAN });
        let mid = partition(idx, |i| self.x.get(i, split.feature) <= split.threshold);
        let (l_idx, r_idx) = idx.split_at_mut(mid);
        let left = self.build(l_idx, depth + 1, rng);
        let right = self.build(r_idx, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Stable partition: entries satisfying `pred` first. Returns the split point.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| pred(i));
    let mid = l.len();
    idx[..mid].copy_from_slice(&l);
    idx[mid..].copy_from_slice(&r);
    mid
}

/// Fit a Gini classification tree on the rows listed in `sample_idx`
/// (duplicates allowed, as produced by bootstrapping).
pub fn fit_classification_tree(
    x: &Matrix,
    y: &[usize],
    weights: &[f64],
    n_classes: usize,
    sample_idx: &[usize],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let mut builder = ClassificationBuilder {
        x,
        y,
        w: weights,
        n_classes,
        params,
        n_try: params.max_features.resolve(x.cols()),
        nodes: Vec::new(),
        impurity_decrease: vec![0.0; x.cols()],
    };
    let mut idx = sample_idx.to_vec();
    builder.build(&mut idx, 0, rng);
    Tree {
        nodes: builder.nodes,
        n_features: x.cols(),
        impurity_decrease: builder.impurity_decrease,
    }
}

/// Fit a squared-error regression tree. Leaf values are produced by
/// `leaf_value` from the sample indices that reach the leaf.
pub fn fit_regression_tree(
    x: &Matrix,
    target: &[f64],
    max_depth: usize,
    min_samples_split: usize,
    leaf_value: &dyn Fn(&[usize]) -> f64,
) -> Tree {
    struct Builder<'a> {
        x: &'a Matrix,
        t: &'a [f64],
        max_depth: usize,
        min_split: usize,
        leaf_value: &'a dyn Fn(&[usize]) -> f64,
        nodes: Vec<Node>,
        dec: Vec<f64>,
    }

    impl Builder<'_> {
        fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
            let n = idx.len() as f64;
            let sum: f64 = idx.iter().map(|&i| self.t[i]).sum();
            let sum_sq: f64 = idx.iter().map(|&i| self.t[i] * self.t[i]).sum();
            let sse = sum_sq - sum * sum / n;
            if depth >= self.max_depth || idx.len() < self.min_split || sse <= 1e-15 {
                let value = (self.leaf_value)(idx);
                self.nodes.push(Node::Leaf { value });
                return self.nodes.len() - 1;
            }
            let mut best: Option<Split> = None;
            for f in 0..self.x.cols() {
                let mut vals: Vec<(f64, f64)> = idx.iter().map(|&i| (self.x.get(i, f), self.t[i])).collect();
                vals.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (mut ls, mut lsq) = (0.0, 0.0);
                for k in 0..vals.len() - 1 {
                    ls += vals[k].1;
                    lsq += vals[k].1 * vals[k].1;
                    if vals[k].0 >= vals[k + 1].0 {
                        continue;
                    }
                    let nl = (k + 1) as f64;
                    let nr = n - nl;
                    let (rs, rsq) = (sum - ls, sum_sq - lsq);
                    let child = (lsq - ls * ls / nl) + (rsq - rs * rs / nr);
                    let cand = Split {
                        feature: f,
                        threshold: midpoint(vals[k].0, vals[k + 1].0),
                        gain: sse - child,
                    };
                    if better(&cand, &best) {
                        best = Some(cand);
                    }
                }
            }
            let Some(split) = best else {
                let value = (self.leaf_value)(idx);
                self.nodes.push(Node::Leaf { value });
                return self.nodes.len() - 1;
            };
            self.dec[split.feature] += split.gain.max(0.0);
            let id = self.nodes.len();
            self.nodes.push(Node::Leaf { value: f64::NAN });
            let x = self.x;
            let mid = partition(idx, |i| x.get(i, split.feature) <= split.threshold);
            let (l_idx, r_idx) = idx.split_at_mut(mid);
            let left = self.build(l_idx, depth + 1);
            let right = self.build(r_idx, depth + 1);
            self.nodes[id] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            id
        }
    }

    let mut b = Builder {
        x,
        t: target,
        max_depth,
        min_split: min_samples_split.max(2),
        leaf_value,
        nodes: Vec::new(),
        dec: vec![0.0; x.cols()],
    };
    let mut idx: Vec<usize> = (0..x.rows()).collect();
    b.build(&mut idx, 0);
    Tree {
        nodes: b.nodes,
        n_features: x.cols(),
        impurity_decrease: b.dec,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn single_split_tree() {
        let x = Matrix::from_rows(&[[0.0, 5.0], [1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]).unwrap();
        let y = [0, 0, 1, 1];
        let w = [1.0; 4];
        let t = fit_classification_tree(&x, &y, &w, 2, &[0, 1, 2, 3], &TreeParams::default(), &mut rng());
        assert_eq!(t.nodes.len(), 3);
        assert_eq!(t.normalized_importances(), vec![1.0, 0.0]);
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, threshold, .. } if threshold == 1.5));
        assert_eq!(t.split_features(), vec![0]);
    }

    #[test]
    fn constant_features_give_leaf() {
        let x = Matrix::from_rows(&[[1.0], [1.0], [1.0]]).unwrap();
        let t = fit_classification_tree(&x, &[0, 1, 1], &[1.0; 3], 2, &[0, 1, 2], &TreeParams::default(), &mut rng());
        assert!(t.is_single_leaf());
        assert_eq!(t.predict_class(&[1.0]), 1);
        assert_eq!(t.normalized_importances(), vec![0.0]);
    }

    #[test]
    fn depth_cap_respected() {
        let x = Matrix::from_rows(&(0..16).map(|i| [i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<usize> = (0..16).map(|i| i % 2).collect();
        let params = TreeParams {
            max_depth: Some(2),
            ..TreeParams::default()
        };
        let idx: Vec<usize> = (0..16).collect();
        let t = fit_classification_tree(&x, &y, &[1.0; 16], 2, &idx, &params, &mut rng());
        assert!(t.depth() <= 2);
    }

    #[test]
    fn equal_gain_prefers_lowest_feature() {
        // Features 0 and 1 are identical; the split must use feature 0.
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        let t = fit_classification_tree(&x, &[0, 0, 1, 1], &[1.0; 4], 2, &[0, 1, 2, 3], &TreeParams::default(), &mut rng());
        assert_eq!(t.split_features(), vec![0]);
    }

    #[test]
    fn regression_tree_fits_step() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let t_vals = [1.0, 1.0, 5.0, 5.0];
        let mean = |idx: &[usize]| idx.iter().map(|&i| t_vals[i]).sum::<f64>() / idx.len() as f64;
        let t = fit_regression_tree(&x, &t_vals, 3, 2, &mean);
        assert_eq!(t.leaf_value(&[0.5]), 1.0);
        assert_eq!(t.leaf_value(&[2.5]), 5.0);
    }
}
