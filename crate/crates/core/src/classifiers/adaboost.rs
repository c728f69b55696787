use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeParams};
use super::{argmax, LabeledSet};

/// Multiclass AdaBoost (SAMME) over depth-1 trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub dim: usize,
    pub n_classes: usize,
    pub stumps: Vec<DecisionTree>,
    pub alphas: Vec<f64>,
    /// Weighted training error of each accepted stump.
    pub errors: Vec<f64>,
    /// Majority class, used only when no round was accepted.
    pub fallback: usize,
}

const STUMP: TreeParams = TreeParams {
    max_depth: 1,
    min_samples_split: 2,
    max_features: None,
};

impl AdaBoostModel {
    pub fn fit(data: &LabeledSet, rounds: usize) -> Self {
        let n = data.len();
        let c = data.n_classes as f64;
        let mut weights = vec![1.0 / n as f64; n];
        let mut counts = vec![0.0; data.n_classes];
        data.y.iter().for_each(|&l| counts[l] += 1.0);
        let mut model = AdaBoostModel {
            dim: data.dim(),
            n_classes: data.n_classes,
            stumps: Vec::new(),
            alphas: Vec::new(),
            errors: Vec::new(),
            fallback: argmax(&counts),
        };

        for _ in 0..rounds {
            let stump =
                DecisionTree::fit_weighted(&data.x, &data.y, data.n_classes, &weights, &STUMP, 0);
            let miss: Vec<bool> = data
                .x
                .iter()
                .zip(&data.y)
                .map(|(x, &y)| stump.predict(x) != y)
                .collect();
            let total: f64 = weights.iter().sum();
            let err = weights
                .iter()
                .zip(&miss)
                .filter(|(_, m)| **m)
                .map(|(w, _)| w)
                .sum::<f64>()
                / total;
            if err >= 1.0 - 1.0 / c {
                break;
            }
            let clamped = err.max(1e-10);
            let alpha = ((1.0 - clamped) / clamped).ln() + (c - 1.0).ln();
            model.stumps.push(stump);
            model.alphas.push(alpha);
            model.errors.push(err);
            if err <= 0.0 {
                break;
            }
            for (w, m) in weights.iter_mut().zip(&miss) {
                if *m {
                    *w *= alpha.exp();
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        model
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        if self.stumps.is_empty() {
            return self.fallback;
        }
        let mut scores = vec![0.0; self.n_classes];
        for (stump, alpha) in self.stumps.iter().zip(&self.alphas) {
            scores[stump.predict(x)] += alpha;
        }
        argmax(&scores)
    }
}
