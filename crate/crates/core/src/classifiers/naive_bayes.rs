use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{argmax, LabeledSet};

/// Gaussian naive Bayes with per-class, per-dimension variances.
///
/// `epsilon = 1e-9 * max per-dimension variance` is added to every variance,
/// which keeps log-likelihoods finite even for constant features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    pub dim: usize,
    pub log_prior: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
}

const VAR_SMOOTHING: f64 = 1e-9;

impl GaussianNbModel {
    pub fn fit(data: &LabeledSet) -> Self {
        let (c, d, n) = (data.n_classes, data.dim(), data.len());
        let mut counts = vec![0usize; c];
        let mut mean = vec![vec![0.0; d]; c];
        for (row, &label) in data.x.iter().zip(&data.y) {
            counts[label] += 1;
            for (m, v) in mean[label].iter_mut().zip(row) {
                *m += v;
            }
        }
        for (m, &cnt) in mean.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= cnt as f64);
        }
        let mut var = vec![vec![0.0; d]; c];
        for (row, &label) in data.x.iter().zip(&data.y) {
            for ((s, v), m) in var[label].iter_mut().zip(row).zip(&mean[label]) {
                *s += (v - m) * (v - m);
            }
        }
        for (s, &cnt) in var.iter_mut().zip(&counts) {
            s.iter_mut().for_each(|v| *v /= cnt as f64);
        }

        let global_max_var = (0..d)
            .map(|j| {
                let mu = data.x.iter().map(|r| r[j]).sum::<f64>() / n as f64;
                data.x.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / n as f64
            })
            .fold(0.0, f64::max);
        let epsilon = if global_max_var > 0.0 {
            VAR_SMOOTHING * global_max_var
        } else {
            VAR_SMOOTHING
        };
        var.iter_mut()
            .for_each(|row| row.iter_mut().for_each(|v| *v += epsilon));

        GaussianNbModel {
            dim: d,
            log_prior: counts.iter().map(|&k| (k as f64 / n as f64).ln()).collect(),
            mean,
            var,
        }
    }

    /// Unnormalized log posterior per class.
    pub fn log_scores(&self, x: &[f64]) -> Vec<f64> {
        self.log_prior
            .iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((lp, mean), var)| {
                lp + x
                    .iter()
                    .zip(mean)
                    .zip(var)
                    .map(|((xi, m), v)| -0.5 * (2.0 * PI * v).ln() - (xi - m).powi(2) / (2.0 * v))
                    .sum::<f64>()
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.log_scores(x))
    }
}
