use serde::{Deserialize, Serialize};

use super::LabeledSet;
use crate::codebook::squared_distance;

/// Stores the training set; predicts by majority vote of the k nearest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub dim: usize,
    pub n_classes: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl KnnModel {
    pub fn fit(data: &LabeledSet, k: usize) -> Self {
        KnnModel {
            k,
            dim: data.dim(),
            n_classes: data.n_classes,
            x: data.x.clone(),
            y: data.y.clone(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut neighbors: Vec<(f64, usize)> = self
            .x
            .iter()
            .zip(&self.y)
            .map(|(row, &label)| (squared_distance(row, x), label))
            .collect();
        // Equal distances prefer the lower label.
        neighbors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0usize; self.n_classes];
        for (_, label) in neighbors.iter().take(self.k.min(neighbors.len())) {
            votes[*label] += 1;
        }
        let max = votes.iter().copied().max().unwrap_or(0);
        votes.iter().position(|v| *v == max).unwrap_or(0)
    }
}
