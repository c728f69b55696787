//! Leakage-free k-fold evaluation of both representations.
//!
//! Each recording is cut into `n_folds` contiguous raw-sample blocks before
//! anything else happens. Every block is filtered and windowed on its own, so
//! no window (and no filter state) crosses a fold boundary. Per held-out fold,
//! the standardizer and codebook only ever see the training blocks.

use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bow::encode_segments;
use crate::classifiers::{self, LabeledSet};
use crate::codebook::{Codebook, Standardizer};
use crate::config::{ConfigSnapshot, RunConfig};
use crate::dataset_io::Cohort;
use crate::features::{features_from_slices, slide_windows, FeatureVector, WindowSpec};
use crate::preprocess::separate;
use crate::seeding;
use crate::{Error, Result, FORMAT_VERSION};

/// Seed-path tag for codebook fits, kept apart from classifier ids.
const CODEBOOK_STREAM: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bow,
    Statistical,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Bow => "bow",
            Mode::Statistical => "statistical",
        }
    }
}

/// Contiguous raw-sample blocks per recording (indexed like
/// `cohort.recordings`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub blocks: Vec<Vec<Range<usize>>>,
}

/// Cuts each recording into `n_folds` blocks whose sizes differ by at most
/// one sample. Every block must hold at least one window.
pub fn make_folds(cohort: &Cohort, n_folds: usize, window: &WindowSpec) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::InvalidHyperparam("need at least 2 folds".into()));
    }
    let blocks = cohort
        .recordings
        .iter()
        .map(|rec| {
            let n = rec.len();
            if n / n_folds < window.length {
                return Err(Error::RecordingTooShort {
                    recording: rec.id(),
                    len: n,
                    folds: n_folds,
                    window: window.length,
                });
            }
            Ok((0..n_folds)
                .map(|f| f * n / n_folds..(f + 1) * n / n_folds)
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(FoldPlan { n_folds, blocks })
}

impl FoldPlan {
    /// Raw-sample ranges of every window inside one block.
    pub fn window_ranges(
        &self,
        recording: usize,
        fold: usize,
        window: &WindowSpec,
    ) -> Vec<Range<usize>> {
        let block = &self.blocks[recording][fold];
        (0..window.count(block.len()))
            .map(|i| {
                let start = block.start + i * window.stride;
                start..start + window.length
            })
            .collect()
    }
}

/// Feature vectors of one block, in window order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFeatures {
    pub label: usize,
    pub recording: usize,
    pub fold: usize,
    pub range: Range<usize>,
    pub windows: Vec<FeatureVector>,
}

pub fn block_features(
    cohort: &Cohort,
    plan: &FoldPlan,
    config: &RunConfig,
) -> Result<Vec<BlockFeatures>> {
    let jobs: Vec<(usize, usize)> = (0..cohort.recordings.len())
        .flat_map(|r| (0..plan.n_folds).map(move |f| (r, f)))
        .collect();
    jobs.par_iter()
        .map(|&(r, f)| {
            let rec = &cohort.recordings[r];
            let range = plan.blocks[r][f].clone();
            let sig = separate(&rec.slice(range.clone()), &config.filter)?;
            let windows = slide_windows(&sig, &config.window)?
                .iter()
                .map(|w| features_from_slices([w.ac(0), w.ac(1), w.ac(2)], w.raw_z()))
                .collect();
            let label = cohort
                .label_of(&rec.subject_id)
                .ok_or_else(|| Error::Internal(format!("unlabeled subject {}", rec.subject_id)))?;
            Ok(BlockFeatures {
                label,
                recording: r,
                fold: f,
                range,
                windows,
            })
        })
        .collect()
}

fn train_vectors(blocks: &[BlockFeatures], test_fold: usize) -> Vec<&[f64]> {
    blocks
        .iter()
        .filter(|b| b.fold != test_fold)
        .flat_map(|b| b.windows.iter().map(|v| v.as_slice()))
        .collect()
}

/// Codebook for one held-out fold, fitted on the other folds only.
pub fn fold_codebook(
    blocks: &[BlockFeatures],
    test_fold: usize,
    config: &RunConfig,
) -> Result<Codebook> {
    let train = train_vectors(blocks, test_fold);
    let seed = seeding::mix_path(config.seed, &[test_fold as u64, CODEBOOK_STREAM]);
    Codebook::fit(&train, config.k, seed, &config.kmeans)
}

struct WordRun {
    label: usize,
    is_test: bool,
    words: Vec<usize>,
}

/// Word sequences per recording: the test block on its own, and each run of
/// adjacent training blocks joined end to end.
fn word_runs(
    blocks: &[BlockFeatures],
    test_fold: usize,
    codebook: &Codebook,
) -> Result<Vec<WordRun>> {
    let mut runs: Vec<WordRun> = Vec::new();
    let mut prev: Option<(usize, usize)> = None;
    for b in blocks {
        let is_test = b.fold == test_fold;
        let words = b
            .windows
            .iter()
            .map(|v| codebook.assign_word(v.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        let extends = !is_test
            && prev == Some((b.recording, b.fold.wrapping_sub(1)))
            && runs.last().is_some_and(|r| !r.is_test);
        if extends {
            runs.last_mut().expect("run exists").words.extend(words);
        } else {
            runs.push(WordRun {
                label: b.label,
                is_test,
                words,
            });
        }
        prev = Some((b.recording, b.fold));
    }
    Ok(runs)
}

/// Classification samples of one fold split.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldSamples {
    pub train: LabeledSet,
    pub test_x: Vec<Vec<f64>>,
    pub test_y: Vec<usize>,
}

/// Builds train/test samples for one held-out fold: standardized window
/// vectors (statistical mode) or per-segment word histograms (bow mode).
/// Training segments may span adjacent training blocks; test segments never
/// leave the test block.
pub fn fold_samples(
    blocks: &[BlockFeatures],
    test_fold: usize,
    mode: Mode,
    n_classes: usize,
    config: &RunConfig,
) -> Result<FoldSamples> {
    let mut train = (Vec::new(), Vec::new());
    let mut test = (Vec::new(), Vec::new());
    match mode {
        Mode::Statistical => {
            let st = Standardizer::fit(&train_vectors(blocks, test_fold))?;
            for b in blocks {
                let dest = if b.fold == test_fold {
                    &mut test
                } else {
                    &mut train
                };
                for v in &b.windows {
                    dest.0.push(st.apply(v.as_slice())?);
                    dest.1.push(b.label);
                }
            }
        }
        Mode::Bow => {
            let codebook = fold_codebook(blocks, test_fold, config)?;
            for run in word_runs(blocks, test_fold, &codebook)? {
                if run.words.len() < config.segment.segment_windows {
                    continue;
                }
                let dest = if run.is_test { &mut test } else { &mut train };
                for h in encode_segments(&run.words, &config.segment, codebook.k)? {
                    dest.0.push(h.values);
                    dest.1.push(run.label);
                }
            }
        }
    }
    if test.0.is_empty() {
        return Err(Error::InsufficientSegments(test_fold));
    }
    Ok(FoldSamples {
        train: LabeledSet::new(train.0, train.1, n_classes)?,
        test_x: test.0,
        test_y: test.1,
    })
}

/// Rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let c = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; c]; c],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(o) {
                *a += b;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Integer grid with subject labels.
    pub fn render(&self) -> String {
        let width = self
            .labels
            .iter()
            .map(|l| l.len())
            .chain(self.counts.iter().flatten().map(|c| c.to_string().len()))
            .max()
            .unwrap_or(1);
        let mut out = format!("{:>width$}", "");
        for l in &self.labels {
            let _ = write!(out, " {l:>width$}");
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.counts) {
            let _ = write!(out, "{l:>width$}");
            for c in row {
                let _ = write!(out, " {c:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

/// `trace / total`.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(cm.trace() as f64 / total as f64)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierResult {
    pub name: String,
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over folds.
    pub sd: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub mode: Mode,
    pub config: ConfigSnapshot,
    /// Held-out folds, in evaluation order.
    pub folds: Vec<usize>,
    pub classifiers: Vec<ClassifierResult>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "eval report json".into(),
            message: e.to_string(),
        })
    }

    pub fn get(&self, name: &str) -> Option<&ClassifierResult> {
        self.classifiers.iter().find(|c| c.name == name)
    }

    pub fn mean_accuracy(&self) -> f64 {
        mean_sd(&self.classifiers.iter().map(|c| c.mean).collect::<Vec<_>>()).0
    }
}

/// Runs every configured classifier over the fold rotation (or only the last
/// fold when `config.single_split` is set).
///
/// Each (fold, classifier) cell trains with seed `mix(seed, fold, id)`, and
/// results are gathered in fixed order, so the report does not depend on
/// thread scheduling.
pub fn run_mode(cohort: &Cohort, mode: Mode, config: &RunConfig) -> Result<EvalReport> {
    config.validate()?;
    if cohort.n_classes() < 2 {
        return Err(Error::DegenerateTrainingSet(
            "need at least 2 subjects".into(),
        ));
    }
    let plan = make_folds(cohort, config.folds, &config.window)?;
    let blocks = block_features(cohort, &plan, config)?;
    run_on_blocks(cohort, &blocks, mode, config)
}

/// [`run_mode`] on precomputed block features.
pub fn run_on_blocks(
    cohort: &Cohort,
    blocks: &[BlockFeatures],
    mode: Mode,
    config: &RunConfig,
) -> Result<EvalReport> {
    let n_classes = cohort.n_classes();
    let labels = cohort.subjects();
    let folds: Vec<usize> = if config.single_split {
        vec![config.folds - 1]
    } else {
        (0..config.folds).collect()
    };

    let per_fold: Vec<Vec<ConfusionMatrix>> = folds
        .par_iter()
        .map(|&fold| {
            let samples = fold_samples(blocks, fold, mode, n_classes, config)?;
            config
                .classifiers
                .par_iter()
                .map(|&alg| {
                    let seed = seeding::mix_path(config.seed, &[fold as u64, alg.id()]);
                    let model = classifiers::fit(alg, &samples.train, &config.hyper, seed)?;
                    let predicted = model.predict_batch(&samples.test_x)?;
                    let mut cm = ConfusionMatrix::new(labels.clone());
                    for (&t, &p) in samples.test_y.iter().zip(&predicted) {
                        cm.record(t, p);
                    }
                    Ok(cm)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let classifiers = config
        .classifiers
        .iter()
        .enumerate()
        .map(|(c, alg)| {
            let mut pooled = ConfusionMatrix::new(labels.clone());
            let mut fold_accuracies = Vec::with_capacity(folds.len());
            for fold_cms in &per_fold {
                fold_accuracies.push(accuracy(&fold_cms[c])?);
                pooled.merge(&fold_cms[c]);
            }
            let (mean, sd) = mean_sd(&fold_accuracies);
            Ok(ClassifierResult {
                name: alg.name().to_string(),
                fold_accuracies,
                mean,
                sd,
                confusion: pooled,
            })
        })
        .collect::<Result<_>>()?;

    Ok(EvalReport {
        format_version: FORMAT_VERSION,
        mode,
        config: config.snapshot(),
        folds,
        classifiers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierGap {
    pub name: String,
    /// bow accuracy minus statistical accuracy.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub format_version: u32,
    pub config: ConfigSnapshot,
    pub per_classifier: Vec<ClassifierGap>,
    pub mean: f64,
    /// Population standard deviation over classifiers.
    pub sd: f64,
}

impl GapReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "gap report json".into(),
            message: e.to_string(),
        })
    }
}

/// Per-classifier mean-accuracy gap over the classifiers both reports share.
pub fn compare(bow: &EvalReport, stat: &EvalReport) -> Result<GapReport> {
    if bow.config != stat.config {
        let differing: Vec<&String> = bow
            .config
            .keys()
            .chain(stat.config.keys())
            .filter(|k| bow.config.get(*k) != stat.config.get(*k))
            .collect();
        return Err(Error::MismatchedConfigs(format!(
            "config keys differ: {differing:?}"
        )));
    }
    if bow.folds != stat.folds {
        return Err(Error::MismatchedConfigs("different fold sets".into()));
    }
    let per_classifier: Vec<ClassifierGap> = bow
        .classifiers
        .iter()
        .filter_map(|b| {
            stat.get(&b.name).map(|s| ClassifierGap {
                name: b.name.clone(),
                delta: b.mean - s.mean,
            })
        })
        .collect();
    if per_classifier.is_empty() {
        return Err(Error::MismatchedConfigs("no classifier in common".into()));
    }
    let (mean, sd) = mean_sd(&per_classifier.iter().map(|g| g.delta).collect::<Vec<_>>());
    Ok(GapReport {
        format_version: FORMAT_VERSION,
        config: bow.config.clone(),
        per_classifier,
        mean,
        sd,
    })
}

/// Aligned accuracy table, one column per report.
pub fn render_accuracy_table(reports: &[&EvalReport]) -> String {
    let mut names: Vec<&str> = Vec::new();
    for r in reports {
        for c in &r.classifiers {
            if !names.contains(&c.name.as_str()) {
                names.push(&c.name);
            }
        }
    }
    let name_w = names.iter().map(|n| n.len()).max().unwrap_or(10).max(10);
    let mut out = format!("{:<name_w$}", "Classifier");
    for r in reports {
        let _ = write!(out, "  {:>17}", r.mode.as_str());
    }
    out.push('\n');
    for name in names {
        let _ = write!(out, "{name:<name_w$}");
        for r in reports {
            match r.get(name) {
                Some(c) => {
                    let _ = write!(out, "  {:>9.3} ± {:<5.3}", c.mean, c.sd);
                }
                None => {
                    let _ = write!(out, "  {:>17}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}
