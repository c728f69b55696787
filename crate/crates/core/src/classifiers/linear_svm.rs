use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{argmax, LabeledSet};
use crate::seeding;

/// One-vs-rest linear SVM trained with the Pegasos subgradient schedule.
///
/// Each weight vector has `dim + 1` entries; the last multiplies a constant
/// 1 appended to every input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub dim: usize,
    pub lambda: f64,
    pub weights: Vec<Vec<f64>>,
}

fn margin(w: &[f64], x: &[f64]) -> f64 {
    let (bias, coef) = w.split_last().expect("weight vector has a bias");
    coef.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias
}

impl LinearSvmModel {
    /// Every class sees the same visiting order, reshuffled each epoch from
    /// `mix(seed, epoch)`, so relabeling classes only relabels the models.
    pub fn fit(data: &LabeledSet, lambda: f64, epochs: usize, seed: u64) -> Self {
        let n = data.len();
        let d = data.dim();
        let orders: Vec<Vec<usize>> = (0..epochs)
            .map(|e| {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut seeding::rng(seeding::mix(seed, e as u64)));
                order
            })
            .collect();
        let radius = 1.0 / lambda.sqrt();

        let weights = (0..data.n_classes)
            .map(|class| {
                let mut w = vec![0.0; d + 1];
                let mut t = 0usize;
                for order in &orders {
                    for &i in order {
                        t += 1;
                        let eta = 1.0 / (lambda * t as f64);
                        let y = if data.y[i] == class { 1.0 } else { -1.0 };
                        let x = &data.x[i];
                        let violated = y * margin(&w, x) < 1.0;
                        let shrink = 1.0 - eta * lambda;
                        w.iter_mut().for_each(|v| *v *= shrink);
                        if violated {
                            for (wj, xj) in w.iter_mut().zip(x.iter().chain(std::iter::once(&1.0)))
                            {
                                *wj += eta * y * xj;
                            }
                        }
                        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if norm > radius {
                            let s = radius / norm;
                            w.iter_mut().for_each(|v| *v *= s);
                        }
                    }
                }
                w
            })
            .collect();
        LinearSvmModel {
            dim: d,
            lambda,
            weights,
        }
    }

    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| margin(w, x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.margins(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_clusters() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let s = if i < 20 { -2.0 } else { 2.0 };
                vec![s + (i as f64 * 0.7).sin() * 0.5, (i as f64 * 1.3).cos()]
            })
            .collect();
        let y: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let data = LabeledSet::new(x.clone(), y.clone(), 2).unwrap();
        let m = LinearSvmModel::fit(&data, 1e-3, 50, 4);
        let pred: Vec<usize> = x.iter().map(|r| m.predict(r)).collect();
        assert_eq!(pred, y);
        assert_eq!(m.weights.len(), 2);
        assert_eq!(m.weights[0].len(), 3);
    }

    #[test]
    fn weights_stay_in_pegasos_ball() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, -(i as f64)]).collect();
        let y: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let data = LabeledSet::new(x, y, 3).unwrap();
        let m = LinearSvmModel::fit(&data, 1e-2, 5, 0);
        for w in &m.weights {
            assert!(w.iter().map(|v| v * v).sum::<f64>().sqrt() <= 10.0 + 1e-9);
        }
    }
}
