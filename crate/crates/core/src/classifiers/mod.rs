//! Six classifiers behind one fit/predict interface.
//!
//! Every model is deterministic given its seed, and every tie (votes,
//! distances, scores) resolves to the lowest class label.

mod adaboost;
mod knn;
mod linear_svm;
mod naive_bayes;
mod tree;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adaboost::AdaBoostModel;
pub use knn::KnnModel;
pub use linear_svm::LinearSvmModel;
pub use naive_bayes::GaussianNbModel;
pub use tree::{DecisionTree, ForestModel, Node, TreeParams};

use crate::{Error, Result, FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    LinearSvm,
    NaiveBayes,
    DecisionTree,
    RandomForest,
    Knn,
    AdaBoost,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::LinearSvm,
        Algorithm::NaiveBayes,
        Algorithm::DecisionTree,
        Algorithm::RandomForest,
        Algorithm::Knn,
        Algorithm::AdaBoost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LinearSvm => "LinearSVM",
            Algorithm::NaiveBayes => "NaiveBayes",
            Algorithm::DecisionTree => "DecisionTree",
            Algorithm::RandomForest => "RandomForest",
            Algorithm::Knn => "KNN",
            Algorithm::AdaBoost => "Adaboost",
        }
    }

    /// Stable id used when deriving per-model seeds.
    pub fn id(self) -> u64 {
        Algorithm::ALL.iter().position(|a| *a == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match norm.as_str() {
            "linearsvm" | "svm" => Algorithm::LinearSvm,
            "naivebayes" | "gnb" | "gaussiannb" | "nb" => Algorithm::NaiveBayes,
            "decisiontree" | "tree" | "cart" => Algorithm::DecisionTree,
            "randomforest" | "forest" | "rf" => Algorithm::RandomForest,
            "knn" => Algorithm::Knn,
            "adaboost" | "samme" => Algorithm::AdaBoost,
            "rbfsvm" => {
                return Err(Error::UnknownAlgorithm(
                    "rbfSVM (kernel SVM is not implemented)".into(),
                ))
            }
            _ => return Err(Error::UnknownAlgorithm(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub knn_k: usize,
    pub tree_max_depth: usize,
    pub tree_min_samples_split: usize,
    pub rf_trees: usize,
    pub rf_max_depth: usize,
    pub ada_rounds: usize,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            knn_k: 5,
            tree_max_depth: 20,
            tree_min_samples_split: 2,
            rf_trees: 100,
            rf_max_depth: 20,
            ada_rounds: 50,
            svm_lambda: 1e-4,
            svm_epochs: 100,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("knn_k", self.knn_k),
            ("tree_max_depth", self.tree_max_depth),
            ("rf_trees", self.rf_trees),
            ("rf_max_depth", self.rf_max_depth),
            ("ada_rounds", self.ada_rounds),
            ("svm_epochs", self.svm_epochs),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidHyperparam(format!("{name} must be >= 1")));
        }
        if self.tree_min_samples_split < 2 {
            return Err(Error::InvalidHyperparam(
                "tree_min_samples_split must be >= 2".into(),
            ));
        }
        if !(self.svm_lambda > 0.0 && self.svm_lambda.is_finite()) {
            return Err(Error::InvalidHyperparam("svm_lambda must be > 0".into()));
        }
        Ok(())
    }
}

/// Feature matrix with dense labels `0..n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

impl LabeledSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<usize>, n_classes: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DegenerateTrainingSet(format!(
                "{} rows but {} labels",
                x.len(),
                y.len()
            )));
        }
        if n_classes < 2 || x.len() < n_classes {
            return Err(Error::DegenerateTrainingSet(format!(
                "need n >= C >= 2, got n={} C={n_classes}",
                x.len()
            )));
        }
        let dim = x[0].len();
        for row in &x {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::DegenerateTrainingSet("non-finite feature".into()));
            }
        }
        let mut seen = vec![false; n_classes];
        for &label in &y {
            *seen.get_mut(label).ok_or_else(|| {
                Error::DegenerateTrainingSet(format!("label {label} out of range"))
            })? = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::DegenerateTrainingSet(format!(
                "class {missing} absent from training data"
            )));
        }
        Ok(LabeledSet { x, y, n_classes })
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "params")]
pub enum TrainedModel {
    LinearSvm(LinearSvmModel),
    NaiveBayes(GaussianNbModel),
    DecisionTree(DecisionTree),
    RandomForest(ForestModel),
    Knn(KnnModel),
    AdaBoost(AdaBoostModel),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: TrainedModel,
}

pub fn fit(
    algorithm: Algorithm,
    data: &LabeledSet,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel> {
    hyper.validate()?;
    Ok(match algorithm {
        Algorithm::Knn => TrainedModel::Knn(KnnModel::fit(data, hyper.knn_k)),
        Algorithm::NaiveBayes => TrainedModel::NaiveBayes(GaussianNbModel::fit(data)),
        Algorithm::DecisionTree => {
            let params = TreeParams {
                max_depth: hyper.tree_max_depth,
                min_samples_split: hyper.tree_min_samples_split,
                max_features: None,
            };
            TrainedModel::DecisionTree(DecisionTree::fit(data, &params, seed))
        }
        Algorithm::RandomForest => TrainedModel::RandomForest(ForestModel::fit(data, hyper, seed)),
        Algorithm::AdaBoost => TrainedModel::AdaBoost(AdaBoostModel::fit(data, hyper.ada_rounds)),
        Algorithm::LinearSvm => TrainedModel::LinearSvm(LinearSvmModel::fit(
            data,
            hyper.svm_lambda,
            hyper.svm_epochs,
            seed,
        )),
    })
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            TrainedModel::LinearSvm(_) => Algorithm::LinearSvm,
            TrainedModel::NaiveBayes(_) => Algorithm::NaiveBayes,
            TrainedModel::DecisionTree(_) => Algorithm::DecisionTree,
            TrainedModel::RandomForest(_) => Algorithm::RandomForest,
            TrainedModel::Knn(_) => Algorithm::Knn,
            TrainedModel::AdaBoost(_) => Algorithm::AdaBoost,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrainedModel::LinearSvm(m) => m.dim,
            TrainedModel::NaiveBayes(m) => m.dim,
            TrainedModel::DecisionTree(m) => m.dim,
            TrainedModel::RandomForest(m) => m.dim,
            TrainedModel::Knn(m) => m.dim,
            TrainedModel::AdaBoost(m) => m.dim,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(match self {
            TrainedModel::LinearSvm(m) => m.predict(x),
            TrainedModel::NaiveBayes(m) => m.predict(x),
            TrainedModel::DecisionTree(m) => m.predict(x),
            TrainedModel::RandomForest(m) => m.predict(x),
            TrainedModel::Knn(m) => m.predict(x),
            TrainedModel::AdaBoost(m) => m.predict(x),
        })
    }

    pub fn predict_batch<V: AsRef<[f64]> + Sync>(&self, xs: &[V]) -> Result<Vec<usize>> {
        xs.par_iter().map(|x| self.predict(x.as_ref())).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&ModelFile {
            format_version: FORMAT_VERSION,
            model: self.clone(),
        })
        .map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "model json".into(),
            message: e.to_string(),
        })?;
        Ok(file.model)
    }
}

/// Index of the largest score; the first wins on ties.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}
