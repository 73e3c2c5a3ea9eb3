//! CART-style regression trees on weighted targets.
//!
//! Splits minimize the weighted sum of squared deviations. For 0/1 targets
//! this is the Gini criterion (node impurity `p(1−p)` equals the target
//! variance up to a factor of two), and for residual targets it is plain
//! variance reduction, so one grower serves the classification ensembles and
//! gradient boosting alike.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Features considered per split; `None` means all.
    pub max_features: Option<usize>,
}

impl Tree {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// Index of the leaf a row lands in.
    pub fn leaf_of(&self, features: &[f64]) -> usize {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { .. } => return at,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn set_leaf_value(&mut self, leaf: usize, value: f64) {
        if let Node::Leaf { value: v } = &mut self.nodes[leaf] {
            *v = value;
        }
    }
}

struct Grower<'a> {
    rows: &'a [Vec<f64>],
    targets: &'a [f64],
    weights: &'a [f64],
    params: TreeParams,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
}

/// Grows a tree on the given row indices. When `max_features` is set, each
/// split samples that many features with the supplied generator.
pub fn grow(
    rows: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    indices: &[usize],
    params: TreeParams,
    rng: Option<&mut ChaCha8Rng>,
) -> Tree {
    let mut grower = Grower {
        rows,
        targets,
        weights,
        params,
        rng,
        nodes: Vec::new(),
    };
    let mut indices = indices.to_vec();
    grower.grow_node(&mut indices, 0);
    Tree {
        nodes: grower.nodes,
    }
}

impl Grower<'_> {
    fn grow_node(&mut self, indices: &mut [usize], depth: usize) -> u32 {
        let (mass, mean, sse) = weighted_stats(self.targets, self.weights, indices);
        let id = self.nodes.len() as u32;
        let pure = sse <= 1e-12 * mass.max(1.0);
        if depth >= self.params.max_depth || indices.len() < 2 || mass <= 0.0 || pure {
            self.nodes.push(Node::Leaf { value: mean });
            return id;
        }
        let Some((feature, threshold)) = self.best_split(indices) else {
            self.nodes.push(Node::Leaf { value: mean });
            return id;
        };
        // Reserve the split slot, then grow children.
        self.nodes.push(Node::Leaf { value: mean });
        let pivot = partition(self.rows, indices, feature, threshold);
        let (left_slice, right_slice) = indices.split_at_mut(pivot);
        let left = self.grow_node(left_slice, depth + 1);
        let right = self.grow_node(right_slice, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.rows.first().map_or(0, Vec::len);
        let all: Vec<usize> = (0..d).collect();
        match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut sampled = all;
                sampled.shuffle(rng);
                sampled.truncate(m);
                sampled.sort_unstable();
                sampled
            }
            _ => all,
        }
    }

    /// The (feature, threshold) minimizing the weighted SSE of the two
    /// children; `None` when no feature varies.
    fn best_split(&mut self, indices: &[usize]) -> Option<(usize, f64)> {
        let features = self.candidate_features();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = indices.to_vec();
        for feature in features {
            order.sort_by(|&a, &b| {
                self.rows[a][feature]
                    .partial_cmp(&self.rows[b][feature])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let total_w: f64 = order.iter().map(|&i| self.weights[i]).sum();
            let total_wt: f64 = order.iter().map(|&i| self.weights[i] * self.targets[i]).sum();
            let total_wt2: f64 = order
                .iter()
                .map(|&i| self.weights[i] * self.targets[i] * self.targets[i])
                .sum();
            let mut left_w = 0.0;
            let mut left_wt = 0.0;
            let mut left_wt2 = 0.0;
            for window in 0..order.len() - 1 {
                let i = order[window];
                left_w += self.weights[i];
                left_wt += self.weights[i] * self.targets[i];
                left_wt2 += self.weights[i] * self.targets[i] * self.targets[i];
                let value = self.rows[i][feature];
                let next = self.rows[order[window + 1]][feature];
                if next <= value {
                    continue;
                }
                let right_w = total_w - left_w;
                if left_w <= 0.0 || right_w <= 0.0 {
                    continue;
                }
                let sse_left = left_wt2 - left_wt * left_wt / left_w;
                let right_wt = total_wt - left_wt;
                let sse_right = (total_wt2 - left_wt2) - right_wt * right_wt / right_w;
                let score = sse_left + sse_right;
                if best.is_none_or(|(s, _, _)| score < s - 1e-15) {
                    best = Some((score, feature, (value + next) / 2.0));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}

fn weighted_stats(targets: &[f64], weights: &[f64], indices: &[usize]) -> (f64, f64, f64) {
    let mass: f64 = indices.iter().map(|&i| weights[i]).sum();
    if mass <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let wt: f64 = indices.iter().map(|&i| weights[i] * targets[i]).sum();
    let wt2: f64 = indices
        .iter()
        .map(|&i| weights[i] * targets[i] * targets[i])
        .sum();
    let mean = wt / mass;
    (mass, mean, (wt2 - wt * wt / mass).max(0.0))
}

/// In-place partition by the split predicate; returns the pivot. Keeps the
/// relative order inside each side for determinism.
fn partition(rows: &[Vec<f64>], indices: &mut [usize], feature: usize, threshold: f64) -> usize {
    let mut sorted: Vec<usize> = Vec::with_capacity(indices.len());
    sorted.extend(indices.iter().copied().filter(|&i| rows[i][feature] <= threshold));
    let pivot = sorted.len();
    sorted.extend(indices.iter().copied().filter(|&i| rows[i][feature] > threshold));
    indices.copy_from_slice(&sorted);
    pivot
}
