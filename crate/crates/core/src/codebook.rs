//! Vocabulary learning: z-scoring, Lloyd's K-means with k-means++ seeding,
//! the WCSS criterion and the elbow scan.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ConfigSnapshot;
use crate::features::FEATURE_ORDER_VERSION;
use crate::seeding;
use crate::{Error, Result, FORMAT_VERSION};

/// Per-dimension z-scoring fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::TooFewVectors(vectors.len()));
        }
        let dim = vectors[0].as_ref().len();
        if let Some(bad) = vectors.iter().find(|v| v.as_ref().len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.as_ref().len(),
            });
        }
        let n = vectors.len() as f64;
        let mut mean = vec![0.0; dim];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(v.as_ref()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut sd = vec![0.0; dim];
        for v in vectors {
            for ((s, x), m) in sd.iter_mut().zip(v.as_ref()).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        sd.iter_mut().for_each(|s| *s = (*s / n).sqrt());
        Ok(Standardizer { mean, sd })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Zero-sd dimensions are centered but not scaled.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        Ok(v.iter()
            .zip(&self.mean)
            .zip(&self.sd)
            .map(|((x, m), s)| (x - m) / scale(*s))
            .collect())
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.mean)
            .zip(&self.sd)
            .map(|((x, m), s)| x * scale(*s) + m)
            .collect()
    }

    pub fn apply_all<V: AsRef<[f64]>>(&self, vectors: &[V]) -> Result<Vec<Vec<f64>>> {
        vectors.iter().map(|v| self.apply(v.as_ref())).collect()
    }
}

fn scale(sd: f64) -> f64 {
    if sd > 0.0 {
        sd
    } else {
        1.0
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid; ties go to the lowest index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// Within-cluster sum of squares averaged over the number of clusters:
/// `(Σ_j Σ_{i in j} ||x_i - C_j||²) / M`.
pub fn wcss(points: &[Vec<f64>], assignment: &[usize], centroids: &[Vec<f64>]) -> Result<f64> {
    if points.len() != assignment.len() || centroids.is_empty() {
        return Err(Error::AssignmentMismatch);
    }
    let mut total = 0.0;
    for (p, &a) in points.iter().zip(assignment) {
        let c = centroids.get(a).ok_or(Error::AssignmentMismatch)?;
        if c.len() != p.len() {
            return Err(Error::AssignmentMismatch);
        }
        total += squared_distance(p, c);
    }
    Ok(total / centroids.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

/// One Lloyd's run from one k-means++ seeding.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub wcss: f64,
    /// WCSS after the initial assignment and after every iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub best: LloydRun,
    /// Index of the restart that produced `best`.
    pub best_restart: usize,
    /// Histories of all restarts, in restart order.
    pub histories: Vec<Vec<f64>>,
}

fn check_points(points: &[Vec<f64>], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidHyperparam("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            k,
            points: points.len(),
        });
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    Ok(())
}

fn kmeans_plus_plus<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` just short of `target`.
            chosen.unwrap_or_else(|| d2.iter().rposition(|d| *d > 0.0).unwrap_or(0))
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign_all(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points.iter().map(|p| nearest(p, centroids)).collect()
}

/// Lloyd's iterations from a k-means++ start drawn with `seed`.
pub fn lloyd_run(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<LloydRun> {
    check_points(points, k)?;
    let dim = points[0].len();
    let mut rng = seeding::rng(seed);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let mut assignment = assign_all(points, &centroids);
    let mut history = vec![wcss(points, &assignment, &centroids)?];

    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &n), old)| {
                if n == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|v| v / n as f64).collect()
                }
            })
            .collect();

        // Empty clusters take over the point farthest from its own centroid.
        let mut taken = vec![false; points.len()];
        let empty: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
        for j in empty {
            let mut far = None;
            let mut far_d = -1.0;
            for (i, (p, &a)) in points.iter().zip(&assignment).enumerate() {
                let d = squared_distance(p, &next[a]);
                if !taken[i] && d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
            if let Some(i) = far {
                taken[i] = true;
                next[j] = points[i].clone();
                counts[assignment[i]] -= 1;
                assignment[i] = j;
                counts[j] += 1;
            }
        }

        let movement = next
            .iter()
            .zip(&centroids)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        assignment = assign_all(points, &centroids);
        history.push(wcss(points, &assignment, &centroids)?);
        if movement < tol {
            break;
        }
    }
    let wcss = *history.last().expect("history is non-empty");
    Ok(LloydRun {
        centroids,
        assignment,
        wcss,
        history,
    })
}

/// Best of `params.restarts` Lloyd's runs; restart `r` uses seed
/// `mix(seed, r)`. Ties keep the earliest restart.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<KMeansFit> {
    check_points(points, k)?;
    if params.restarts == 0 || params.tol.is_nan() || params.tol < 0.0 {
        return Err(Error::InvalidHyperparam(
            "kmeans needs restarts >= 1 and tol >= 0".into(),
        ));
    }
    let runs = (0..params.restarts)
        .into_par_iter()
        .map(|r| {
            lloyd_run(
                points,
                k,
                seeding::mix(seed, r as u64),
                params.max_iter,
                params.tol,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let histories = runs.iter().map(|r| r.history.clone()).collect();
    let (best_restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.wcss < a.1.wcss { b } else { a })
        .expect("at least one restart");
    Ok(KMeansFit {
        best,
        best_restart,
        histories,
    })
}

/// The learned vocabulary: centroids live in standardized feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub format_version: u32,
    pub k: usize,
    pub feature_order_version: u32,
    pub standardizer: Standardizer,
    pub centroids: Vec<Vec<f64>>,
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub train_wcss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigSnapshot>,
}

impl Codebook {
    /// Standardizes `vectors` and clusters them into `k` words.
    pub fn fit<V: AsRef<[f64]>>(
        vectors: &[V],
        k: usize,
        seed: u64,
        params: &KMeansParams,
    ) -> Result<Self> {
        let standardizer = Standardizer::fit(vectors)?;
        let points = standardizer.apply_all(vectors)?;
        let fit = kmeans(&points, k, seed, params)?;
        Ok(Codebook {
            format_version: FORMAT_VERSION,
            k,
            feature_order_version: FEATURE_ORDER_VERSION,
            standardizer,
            centroids: fit.best.centroids,
            seed,
            restarts: params.restarts,
            max_iter: params.max_iter,
            train_wcss: fit.best.wcss,
            config: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// Nearest word for a raw (unstandardized) vector.
    pub fn assign_word(&self, vector: &[f64]) -> Result<usize> {
        let z = self.standardizer.apply(vector)?;
        Ok(nearest(&z, &self.centroids))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cb: Codebook = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "codebook json".into(),
            message: e.to_string(),
        })?;
        let dim = cb.dim();
        let bad_shape = cb.centroids.len() != cb.k
            || cb.k == 0
            || cb.standardizer.sd.len() != dim
            || cb
                .centroids
                .iter()
                .any(|c| c.len() != dim || c.iter().any(|v| !v.is_finite()));
        if bad_shape {
            return Err(Error::Parse {
                what: "codebook json".into(),
                message: "centroid matrix does not match k and dimension".into(),
            });
        }
        Ok(cb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    pub points: Vec<(usize, f64)>,
}

impl ElbowCurve {
    /// CSV `k,wcss` preceded by `#` metadata lines.
    pub fn to_csv(&self, metadata: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("k,wcss\n");
        for (k, w) in &self.points {
            let _ = writeln!(out, "{k},{w}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let err = |m: String| Error::Parse {
            what: "elbow csv".into(),
            message: m,
        };
        let mut points = Vec::new();
        let mut lines = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.starts_with('#') && !l.is_empty());
        if lines.next() != Some("k,wcss") {
            return Err(err("missing `k,wcss` header".into()));
        }
        for line in lines {
            let (k, w) = line
                .split_once(',')
                .ok_or_else(|| err(format!("bad row `{line}`")))?;
            let k = k.parse().map_err(|_| err(format!("bad k `{k}`")))?;
            let w = w.parse().map_err(|_| err(format!("bad wcss `{w}`")))?;
            points.push((k, w));
        }
        Ok(ElbowCurve { points })
    }
}

/// One K-means fit per k in `k_min..=k_max` on already standardized points;
/// k uses seed `mix(seed, k)`.
pub fn elbow_scan(
    points: &[Vec<f64>],
    k_min: usize,
    k_max: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<ElbowCurve> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::InvalidHyperparam(format!(
            "elbow range {k_min}..={k_max} is empty"
        )));
    }
    if k_max > points.len() {
        return Err(Error::TooFewPoints {
            k: k_max,
            points: points.len(),
        });
    }
    let points = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let fit = kmeans(points, k, seeding::mix(seed, k as u64), params)?;
            Ok((k, fit.best.wcss))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ElbowCurve { points })
}
