//! CART with Gini impurity and sample weights, and a bagged forest of them.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, Hyperparams, LabeledSet};
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features examined per split; `None` means all of them.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        label: usize,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub dim: usize,
    pub n_classes: usize,
    /// Root is `nodes[0]`.
    pub nodes: Vec<Node>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    w: &'a [f64],
    n_classes: usize,
    params: TreeParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn class_weights(&self, rows: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.n_classes];
        for &i in rows {
            counts[self.y[i]] += self.w[i];
        }
        counts
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_weights(&rows);
        let label = argmax(&counts);
        let pure = counts.iter().filter(|c| **c > 0.0).count() <= 1;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { label });
        if pure || depth >= self.params.max_depth || rows.len() < self.params.min_samples_split {
            return id;
        }
        let Some(split) = self.best_split(&rows, &counts) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.x[i][split.feature] <= split.threshold);
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize], totals: &[f64]) -> Option<SplitChoice> {
        let dim = self.x[rows[0]].len();
        let mut order: Vec<usize> = (0..dim).collect();
        let take = match self.params.max_features {
            Some(m) if m < dim => {
                order.shuffle(&mut self.rng);
                m
            }
            _ => dim,
        };
        let mut first: Vec<usize> = order[..take].to_vec();
        first.sort_unstable();
        let mut best = self.search(rows, totals, &first);
        // Like sklearn, keep drawing features while every candidate is constant.
        let mut rest = order[take..].iter();
        while best.is_none() {
            let &f = rest.next()?;
            best = self.search(rows, totals, &[f]);
        }
        best
    }

    /// Lowest weighted Gini over the given features (ascending); ties keep
    /// the lower feature index, then the lower threshold.
    fn search(&self, rows: &[usize], totals: &[f64], features: &[usize]) -> Option<SplitChoice> {
        let total_w: f64 = totals.iter().sum();
        let total_sq: f64 = totals.iter().map(|c| c * c).sum();
        let mut best: Option<SplitChoice> = None;
        let mut sorted = rows.to_vec();
        for &f in features {
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = vec![0.0; self.n_classes];
            let (mut lw, mut lsq) = (0.0, 0.0);
            let mut rsq = total_sq;
            for pos in 0..sorted.len() - 1 {
                let i = sorted[pos];
                let (c, w) = (self.y[i], self.w[i]);
                let right_c = totals[c] - left[c];
                rsq += (right_c - w) * (right_c - w) - right_c * right_c;
                lsq += (left[c] + w) * (left[c] + w) - left[c] * left[c];
                left[c] += w;
                lw += w;
                let (a, b) = (self.x[i][f], self.x[sorted[pos + 1]][f]);
                if a >= b {
                    continue;
                }
                let rw = total_w - lw;
                if lw <= 0.0 || rw <= 0.0 {
                    continue;
                }
                // Σ_side w_side · gini_side = total_w − Σ c²/w per side.
                let impurity = total_w - lsq / lw - rsq / rw;
                let tie_eps = 1e-12 * total_w.max(1.0);
                if best
                    .as_ref()
                    .is_none_or(|b| impurity < b.impurity - tie_eps)
                {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid >= b { a } else { mid };
                    best = Some(SplitChoice {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}

impl DecisionTree {
    pub fn fit(data: &LabeledSet, params: &TreeParams, seed: u64) -> Self {
        let weights = vec![1.0; data.len()];
        Self::fit_weighted(&data.x, &data.y, data.n_classes, &weights, params, seed)
    }

    /// Rows with zero weight are left out entirely.
    pub fn fit_weighted(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        weights: &[f64],
        params: &TreeParams,
        seed: u64,
    ) -> Self {
        let rows: Vec<usize> = (0..x.len()).filter(|&i| weights[i] > 0.0).collect();
        let mut builder = Builder {
            x,
            y,
            w: weights,
            n_classes,
            params: *params,
            rng: seeding::rng(seed),
            nodes: Vec::new(),
        };
        builder.build(rows, 0);
        DecisionTree {
            dim: x.first().map_or(0, Vec::len),
            n_classes,
            nodes: builder.nodes,
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Bootstrap-aggregated CART trees with √d candidate features per split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub dim: usize,
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    /// Tree `t` draws its bootstrap and feature subsets from `mix(seed, t)`.
    pub fn fit(data: &LabeledSet, hyper: &Hyperparams, seed: u64) -> Self {
        let dim = data.dim();
        let params = TreeParams {
            max_depth: hyper.rf_max_depth,
            min_samples_split: hyper.tree_min_samples_split,
            max_features: Some(((dim as f64).sqrt().floor() as usize).max(1)),
        };
        let n = data.len();
        let trees = (0..hyper.rf_trees)
            .into_par_iter()
            .map(|t| {
                let tree_seed = seeding::mix(seed, t as u64);
                let mut rng = seeding::rng(seeding::mix(tree_seed, 0));
                let mut weights = vec![0.0; n];
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
                DecisionTree::fit_weighted(
                    &data.x,
                    &data.y,
                    data.n_classes,
                    &weights,
                    &params,
                    seeding::mix(tree_seed, 1),
                )
            })
            .collect();
        ForestModel {
            dim,
            n_classes: data.n_classes,
            trees,
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes = vec![0.0; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(x)] += 1.0;
        }
        argmax(&votes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(depth: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            min_samples_split: 2,
            max_features: None,
        }
    }

    #[test]
    fn separable_line_needs_one_split() {
        let x: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 3.0, 7.0, 8.0, 9.0]
            .iter()
            .map(|v| vec![*v])
            .collect();
        let y = vec![0, 0, 0, 0, 1, 1, 1];
        let data = LabeledSet::new(x.clone(), y.clone(), 2).unwrap();
        let tree = DecisionTree::fit(&data, &params(20), 0);
        assert_eq!(tree.depth(), 1);
        assert_eq!(
            tree.nodes[0],
            Node::Split {
                feature: 0,
                threshold: 5.0,
                left: 1,
                right: 2
            }
        );
        let pred: Vec<usize> = x.iter().map(|r| tree.predict(r)).collect();
        assert_eq!(pred, y);
    }

    #[test]
    fn split_ties_prefer_lowest_feature() {
        // Both features separate perfectly.
        let x = vec![
            vec![0.0, 10.0],
            vec![1.0, 11.0],
            vec![5.0, 20.0],
            vec![6.0, 21.0],
        ];
        let data = LabeledSet::new(x, vec![0, 0, 1, 1], 2).unwrap();
        let tree = DecisionTree::fit(&data, &params(5), 0);
        assert!(matches!(tree.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let y = vec![0, 1, 1, 0];
        let data = LabeledSet::new(x.clone(), y.clone(), 2).unwrap();
        let tree = DecisionTree::fit(&data, &params(5), 0);
        let pred: Vec<usize> = x.iter().map(|r| tree.predict(r)).collect();
        assert_eq!(pred, y);
        let stump = DecisionTree::fit(&data, &params(1), 0);
        assert!(stump.depth() <= 1);
    }

    #[test]
    fn depth_limit_and_majority_leaf() {
        let x: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let y = vec![0, 1, 0, 1, 0, 1, 0, 1, 0];
        let data = LabeledSet::new(x, y, 2).unwrap();
        let tree = DecisionTree::fit(&data, &params(0), 0);
        assert_eq!(tree.nodes, vec![Node::Leaf { label: 0 }]);
    }

    #[test]
    fn identical_trees_vote_like_one() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i % 7) as f64, (i / 3) as f64])
            .collect();
        let y: Vec<usize> = (0..30).map(|i| (i * 5 % 3) as usize).collect();
        let data = LabeledSet::new(x.clone(), y, 3).unwrap();
        let tree = DecisionTree::fit(&data, &params(3), 0);
        let forest = ForestModel {
            dim: 2,
            n_classes: 3,
            trees: vec![tree.clone(); 5],
        };
        for r in &x {
            assert_eq!(forest.predict(r), tree.predict(r));
        }
    }

    #[test]
    fn forest_fits_training_data() {
        let x: Vec<Vec<f64>> = (0..90)
            .map(|i| {
                let c = (i % 3) as f64;
                vec![
                    c * 4.0 + (i as f64 * 0.37).sin(),
                    -c * 2.0 + (i as f64 * 0.91).cos(),
                ]
            })
            .collect();
        let y: Vec<usize> = (0..90).map(|i| i % 3).collect();
        let data = LabeledSet::new(x.clone(), y.clone(), 3).unwrap();
        let forest = ForestModel::fit(&data, &Hyperparams::default(), 9);
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(r, l)| forest.predict(r) == **l)
            .count();
        assert!(correct as f64 / 90.0 >= 0.95);
    }
}
