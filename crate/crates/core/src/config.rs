//! Run configuration in a flat `key = value` grammar.
//!
//! Blank lines and anything after `#` are ignored. Unknown keys are an error.
//! All defaults live here; [`RunConfig::default`] is the reference run.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bow::SegmentSpec;
use crate::classifiers::{Algorithm, Hyperparams};
use crate::codebook::KMeansParams;
use crate::evaluation::Mode;
use crate::features::WindowSpec;
use crate::preprocess::FilterConfig;
use crate::{Error, Result};

/// Sorted key/value dump of every setting that influences results.
pub type ConfigSnapshot = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeSelection {
    Bow,
    Stat,
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSelection::Bow => vec![Mode::Bow],
            ModeSelection::Stat => vec![Mode::Statistical],
            ModeSelection::Both => vec![Mode::Bow, Mode::Statistical],
        }
    }
}

impl FromStr for ModeSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bow" => Ok(ModeSelection::Bow),
            "stat" | "statistical" => Ok(ModeSelection::Stat),
            "both" => Ok(ModeSelection::Both),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_root: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub filter: FilterConfig,
    pub window: WindowSpec,
    pub k: usize,
    pub elbow_k_min: usize,
    pub elbow_k_max: usize,
    pub kmeans: KMeansParams,
    pub segment: SegmentSpec,
    pub folds: usize,
    pub single_split: bool,
    pub classifiers: Vec<Algorithm>,
    pub hyper: Hyperparams,
    pub mode: ModeSelection,
    /// Worker threads; 0 uses every core. Never changes results.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_root: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            seed: 42,
            filter: FilterConfig::default(),
            window: WindowSpec::default(),
            k: 10,
            elbow_k_min: 2,
            elbow_k_max: 25,
            kmeans: KMeansParams::default(),
            segment: SegmentSpec::default(),
            folds: 10,
            single_split: false,
            classifiers: Algorithm::ALL.to_vec(),
            hyper: Hyperparams::default(),
            mode: ModeSelection::Both,
            jobs: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "data_root",
    "out_dir",
    "seed",
    "m1",
    "n1",
    "cutoff_hz",
    "sample_rate_hz",
    "window_length",
    "window_stride",
    "k",
    "elbow_k_min",
    "elbow_k_max",
    "kmeans_restarts",
    "kmeans_max_iter",
    "kmeans_tol",
    "segment_windows",
    "segment_stride",
    "folds",
    "single_split",
    "classifiers",
    "knn_k",
    "tree_max_depth",
    "tree_min_samples_split",
    "rf_trees",
    "rf_max_depth",
    "ada_rounds",
    "svm_lambda",
    "svm_epochs",
    "mode",
    "jobs",
];

/// Splits config text into `(key, value)` pairs, in file order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid boolean `{value}` for `{key}`"
        ))),
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    /// Defaults overridden by `pairs`; later pairs win.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut cutoff: Option<f64> = None;
        let mut explicit_coeffs = false;
        for (key, value) in pairs {
            let (key, value) = (key.as_str(), value.as_str());
            match key {
                "data_root" => cfg.data_root = PathBuf::from(value),
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "seed" => cfg.seed = parse(key, value)?,
                "m1" => {
                    cfg.filter.m1 = parse(key, value)?;
                    explicit_coeffs = true;
                }
                "n1" => {
                    cfg.filter.n1 = parse(key, value)?;
                    explicit_coeffs = true;
                }
                "cutoff_hz" => cutoff = Some(parse(key, value)?),
                "sample_rate_hz" => cfg.filter.sample_rate_hz = parse(key, value)?,
                "window_length" => cfg.window.length = parse(key, value)?,
                "window_stride" => cfg.window.stride = parse(key, value)?,
                "k" => cfg.k = parse(key, value)?,
                "elbow_k_min" => cfg.elbow_k_min = parse(key, value)?,
                "elbow_k_max" => cfg.elbow_k_max = parse(key, value)?,
                "kmeans_restarts" => cfg.kmeans.restarts = parse(key, value)?,
                "kmeans_max_iter" => cfg.kmeans.max_iter = parse(key, value)?,
                "kmeans_tol" => cfg.kmeans.tol = parse(key, value)?,
                "segment_windows" => cfg.segment.segment_windows = parse(key, value)?,
                "segment_stride" => cfg.segment.segment_stride = parse(key, value)?,
                "folds" => cfg.folds = parse(key, value)?,
                "single_split" => cfg.single_split = parse_bool(key, value)?,
                "classifiers" => {
                    cfg.classifiers = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            s.parse::<Algorithm>()
                                .map_err(|e| Error::Config(e.to_string()))
                        })
                        .collect::<Result<_>>()?;
                }
                "knn_k" => cfg.hyper.knn_k = parse(key, value)?,
                "tree_max_depth" => cfg.hyper.tree_max_depth = parse(key, value)?,
                "tree_min_samples_split" => cfg.hyper.tree_min_samples_split = parse(key, value)?,
                "rf_trees" => cfg.hyper.rf_trees = parse(key, value)?,
                "rf_max_depth" => cfg.hyper.rf_max_depth = parse(key, value)?,
                "ada_rounds" => cfg.hyper.ada_rounds = parse(key, value)?,
                "svm_lambda" => cfg.hyper.svm_lambda = parse(key, value)?,
                "svm_epochs" => cfg.hyper.svm_epochs = parse(key, value)?,
                "mode" => cfg.mode = value.parse()?,
                "jobs" => cfg.jobs = parse(key, value)?,
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        if let Some(cutoff_hz) = cutoff {
            if explicit_coeffs {
                return Err(Error::Config(
                    "set either cutoff_hz or m1/n1, not both".into(),
                ));
            }
            cfg.filter = FilterConfig::from_cutoff(cutoff_hz, cfg.filter.sample_rate_hz)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |r: Result<()>| r.map_err(|e| Error::Config(e.to_string()));
        wrap(self.filter.validate())?;
        wrap(self.window.validate())?;
        wrap(self.segment.validate())?;
        wrap(self.hyper.validate())?;
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.elbow_k_min == 0 || self.elbow_k_min > self.elbow_k_max {
            return Err(Error::Config(
                "elbow range must satisfy 1 <= k_min <= k_max".into(),
            ));
        }
        if self.kmeans.restarts == 0 || self.kmeans.tol.is_nan() || self.kmeans.tol < 0.0 {
            return Err(Error::Config(
                "kmeans needs restarts >= 1 and tol >= 0".into(),
            ));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be >= 2".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Config("at least one classifier is required".into()));
        }
        Ok(())
    }

    /// Every result-affecting setting, formatted canonically. Paths, `mode`
    /// and `jobs` are left out so runs in different directories or with
    /// different thread counts compare equal.
    pub fn snapshot(&self) -> ConfigSnapshot {
        let mut s = ConfigSnapshot::new();
        let mut put = |k: &str, v: String| {
            s.insert(k.to_string(), v);
        };
        put("seed", self.seed.to_string());
        put("m1", self.filter.m1.to_string());
        put("n1", self.filter.n1.to_string());
        put("cutoff_hz", self.filter.cutoff_hz.to_string());
        put("sample_rate_hz", self.filter.sample_rate_hz.to_string());
        put("window_length", self.window.length.to_string());
        put("window_stride", self.window.stride.to_string());
        put("k", self.k.to_string());
        put("elbow_k_min", self.elbow_k_min.to_string());
        put("elbow_k_max", self.elbow_k_max.to_string());
        put("kmeans_restarts", self.kmeans.restarts.to_string());
        put("kmeans_max_iter", self.kmeans.max_iter.to_string());
        put("kmeans_tol", self.kmeans.tol.to_string());
        put("segment_windows", self.segment.segment_windows.to_string());
        put("segment_stride", self.segment.segment_stride.to_string());
        put("folds", self.folds.to_string());
        put("single_split", self.single_split.to_string());
        put(
            "classifiers",
            self.classifiers
                .iter()
                .map(|a| a.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("knn_k", self.hyper.knn_k.to_string());
        put("tree_max_depth", self.hyper.tree_max_depth.to_string());
        put(
            "tree_min_samples_split",
            self.hyper.tree_min_samples_split.to_string(),
        );
        put("rf_trees", self.hyper.rf_trees.to_string());
        put("rf_max_depth", self.hyper.rf_max_depth.to_string());
        put("ada_rounds", self.hyper.ada_rounds.to_string());
        put("svm_lambda", self.hyper.svm_lambda.to_string());
        put("svm_epochs", self.hyper.svm_epochs.to_string());
        s
    }

    /// The snapshot as `(key, value)` pairs, for `#` header lines in CSVs.
    pub fn snapshot_pairs(&self) -> Vec<(String, String)> {
        let mut pairs = vec![(
            "format_version".to_string(),
            crate::FORMAT_VERSION.to_string(),
        )];
        pairs.extend(self.snapshot());
        pairs
    }
}
