use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gaitbow::bow::{encode_segments, histograms_csv, words_for_subject, BowHistogram};
use gaitbow::codebook::{elbow_scan, Codebook, ElbowCurve, Standardizer};
use gaitbow::config::{parse_pairs, RunConfig};
use gaitbow::dataset_io::{load_cohort, save_cohort, synth_cohort};
use gaitbow::evaluation::{
    block_features, compare as gap_of, make_folds, render_accuracy_table, run_on_blocks,
    EvalReport, GapReport, Mode,
};
use gaitbow::features::{extract_all, features_csv, parse_features_csv, FeatureWindow};
use gaitbow::{Error, Result};

use crate::svg::elbow_svg;
use crate::GlobalArgs;

pub const FEATURES_FILE: &str = "features.csv";
pub const ELBOW_FILE: &str = "elbow.csv";
pub const CODEBOOK_FILE: &str = "codebook.json";
pub const HISTOGRAMS_FILE: &str = "histograms.csv";
pub const GAP_FILE: &str = "gap.json";
pub const REPORT_FILE: &str = "report.txt";
pub const ELBOW_SVG_FILE: &str = "elbow.svg";

pub fn eval_file(mode: Mode) -> &'static str {
    match mode {
        Mode::Bow => "eval_bow.json",
        Mode::Statistical => "eval_stat.json",
    }
}

/// Config file first, then command-line overrides.
pub fn load_config(args: &GlobalArgs) -> Result<RunConfig> {
    let mut pairs = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_pairs(&text)?
        }
        None => Vec::new(),
    };
    let mut set = |k: &str, v: String| pairs.push((k.to_string(), v));
    if let Some(v) = args.seed {
        set("seed", v.to_string());
    }
    if let Some(v) = args.k {
        set("k", v.to_string());
    }
    if let Some(v) = args.folds {
        set("folds", v.to_string());
    }
    if let Some(v) = &args.mode {
        set("mode", v.clone());
    }
    if args.single_split {
        set("single_split", "true".into());
    }
    if let Some(v) = &args.out {
        set("out_dir", v.display().to_string());
    }
    if let Some(v) = &args.data {
        set("data_root", v.display().to_string());
    }
    if let Some(v) = args.jobs {
        set("jobs", v.to_string());
    }
    RunConfig::from_pairs(&pairs)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_features(cfg: &RunConfig, path: Option<PathBuf>) -> Result<Vec<FeatureWindow>> {
    let path = path.unwrap_or_else(|| cfg.out_dir.join(FEATURES_FILE));
    let windows = parse_features_csv(&read(&path)?)?;
    if windows.is_empty() {
        return Err(Error::TooFewVectors(0));
    }
    Ok(windows)
}

fn vectors(windows: &[FeatureWindow]) -> Vec<&[f64]> {
    windows.iter().map(|w| w.vector.as_slice()).collect()
}

pub fn synth(cfg: &RunConfig, subjects: usize, seconds: f64) -> Result<String> {
    let cohort = synth_cohort(subjects, seconds, cfg.seed)?;
    save_cohort(&cohort, &cfg.out_dir)?;
    Ok(format!(
        "synth: {} recordings of {seconds} s (seed {}) -> {}",
        cohort.recordings.len(),
        cfg.seed,
        cfg.out_dir.display()
    ))
}

pub fn features(cfg: &RunConfig) -> Result<String> {
    let cohort = load_cohort(&cfg.data_root)?;
    let windows = extract_all(&cohort, &cfg.filter, &cfg.window)?;
    let path = cfg.out_dir.join(FEATURES_FILE);
    write(&path, &features_csv(&windows, &cfg.snapshot_pairs()))?;
    Ok(format!(
        "features: {} windows from {} recordings -> {}",
        windows.len(),
        cohort.recordings.len(),
        path.display()
    ))
}

pub fn elbow(
    cfg: &RunConfig,
    k_min: Option<usize>,
    k_max: Option<usize>,
    features: Option<PathBuf>,
) -> Result<String> {
    let mut cfg = cfg.clone();
    cfg.elbow_k_min = k_min.unwrap_or(cfg.elbow_k_min);
    cfg.elbow_k_max = k_max.unwrap_or(cfg.elbow_k_max);
    cfg.validate()?;
    let windows = load_features(&cfg, features)?;
    let vecs = vectors(&windows);
    let points = Standardizer::fit(&vecs)?.apply_all(&vecs)?;
    let curve = elbow_scan(
        &points,
        cfg.elbow_k_min,
        cfg.elbow_k_max,
        cfg.seed,
        &cfg.kmeans,
    )?;
    let path = cfg.out_dir.join(ELBOW_FILE);
    write(&path, &curve.to_csv(&cfg.snapshot_pairs()))?;
    Ok(format!(
        "elbow: k {}..={} over {} windows -> {}",
        cfg.elbow_k_min,
        cfg.elbow_k_max,
        points.len(),
        path.display()
    ))
}

pub fn vocab(cfg: &RunConfig, features: Option<PathBuf>) -> Result<String> {
    let windows = load_features(cfg, features)?;
    let mut codebook = Codebook::fit(&vectors(&windows), cfg.k, cfg.seed, &cfg.kmeans)?;
    codebook.config = Some(cfg.snapshot());
    let path = cfg.out_dir.join(CODEBOOK_FILE);
    write(&path, &codebook.to_json()?)?;
    Ok(format!(
        "vocab: k={} wcss={:.6} from {} windows -> {}",
        codebook.k,
        codebook.train_wcss,
        windows.len(),
        path.display()
    ))
}

pub fn encode(
    cfg: &RunConfig,
    features: Option<PathBuf>,
    codebook: Option<PathBuf>,
) -> Result<String> {
    let windows = load_features(cfg, features)?;
    let cb_path = codebook.unwrap_or_else(|| cfg.out_dir.join(CODEBOOK_FILE));
    let codebook = Codebook::from_json(&read(&cb_path)?)?;
    let mut rows: Vec<(String, BowHistogram)> = Vec::new();
    // Windows arrive grouped by recording, in window order.
    let mut start = 0;
    while start < windows.len() {
        let key = (&windows[start].subject_id, &windows[start].session_id);
        let end = windows[start..]
            .iter()
            .position(|w| (&w.subject_id, &w.session_id) != key)
            .map_or(windows.len(), |p| start + p);
        let words = words_for_subject(&windows[start..end], &codebook)?;
        for mut h in encode_segments(&words, &cfg.segment, codebook.k)? {
            h.label = windows[start].label;
            rows.push((windows[start].subject_id.clone(), h));
        }
        start = end;
    }
    let path = cfg.out_dir.join(HISTOGRAMS_FILE);
    write(
        &path,
        &histograms_csv(&rows, codebook.k, &cfg.snapshot_pairs()),
    )?;
    Ok(format!(
        "encode: {} histograms with {} bins -> {}",
        rows.len(),
        codebook.k,
        path.display()
    ))
}

pub fn eval(cfg: &RunConfig) -> Result<String> {
    let cohort = load_cohort(&cfg.data_root)?;
    let plan = make_folds(&cohort, cfg.folds, &cfg.window)?;
    let blocks = block_features(&cohort, &plan, cfg)?;
    let mut reports = Vec::new();
    for mode in cfg.mode.modes() {
        let report = run_on_blocks(&cohort, &blocks, mode, cfg)?;
        write(&cfg.out_dir.join(eval_file(mode)), &report.to_json()?)?;
        reports.push(report);
    }
    let mut summary = format!(
        "eval: {} subjects, {} folds",
        cohort.n_classes(),
        report_folds(&reports)
    );
    for r in &reports {
        let _ = write!(
            summary,
            ", {} mean={:.3}",
            r.mode.as_str(),
            r.mean_accuracy()
        );
    }
    if let [bow, stat] = reports.as_slice() {
        let gap = gap_of(bow, stat)?;
        write(&cfg.out_dir.join(GAP_FILE), &gap.to_json()?)?;
        let _ = write!(summary, ", gap={:.3}±{:.3}", gap.mean, gap.sd);
    }
    let _ = write!(summary, " -> {}", cfg.out_dir.display());
    Ok(summary)
}

fn report_folds(reports: &[EvalReport]) -> usize {
    reports.first().map_or(0, |r| r.folds.len())
}

pub fn compare(cfg: &RunConfig, bow: Option<PathBuf>, stat: Option<PathBuf>) -> Result<String> {
    let bow = bow.unwrap_or_else(|| cfg.out_dir.join(eval_file(Mode::Bow)));
    let stat = stat.unwrap_or_else(|| cfg.out_dir.join(eval_file(Mode::Statistical)));
    let bow = EvalReport::from_json(&read(&bow)?)?;
    let stat = EvalReport::from_json(&read(&stat)?)?;
    if bow.mode != Mode::Bow || stat.mode != Mode::Statistical {
        return Err(Error::MismatchedConfigs(
            "expected a bow report and a statistical report".into(),
        ));
    }
    let gap = gap_of(&bow, &stat)?;
    let path = cfg.out_dir.join(GAP_FILE);
    write(&path, &gap.to_json()?)?;
    Ok(format!(
        "compare: gap {:.3}±{:.3} over {} classifiers -> {}",
        gap.mean,
        gap.sd,
        gap.per_classifier.len(),
        path.display()
    ))
}

fn read_optional(path: &Path) -> Result<Option<String>> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(Some(text)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(path, e)),
    }
}

pub fn report(cfg: &RunConfig) -> Result<String> {
    let out = &cfg.out_dir;
    let mut reports = Vec::new();
    for mode in [Mode::Bow, Mode::Statistical] {
        if let Some(text) = read_optional(&out.join(eval_file(mode)))? {
            reports.push(EvalReport::from_json(&text)?);
        }
    }
    let gap = read_optional(&out.join(GAP_FILE))?
        .map(|t| GapReport::from_json(&t))
        .transpose()?;
    let elbow = read_optional(&out.join(ELBOW_FILE))?
        .map(|t| ElbowCurve::from_csv(&t))
        .transpose()?;
    if reports.is_empty() && elbow.is_none() {
        return Err(Error::io(
            out.join(eval_file(Mode::Bow)),
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "no eval reports or elbow curve",
            ),
        ));
    }

    let mut text = format!("format_version={}\n", gaitbow::FORMAT_VERSION);
    if let Some(first) = reports.first() {
        for (k, v) in &first.config {
            let _ = writeln!(text, "{k}={v}");
        }
    }
    if !reports.is_empty() {
        let refs: Vec<&EvalReport> = reports.iter().collect();
        let _ = write!(
            text,
            "\nMean accuracy ± sd over folds\n\n{}",
            render_accuracy_table(&refs)
        );
    }
    if let Some(gap) = &gap {
        let _ = writeln!(text, "\nAccuracy gap (bow - statistical)\n");
        for g in &gap.per_classifier {
            let _ = writeln!(text, "{:<14}{:+.3}", g.name, g.delta);
        }
        let _ = writeln!(text, "{:<14}{:+.3} ± {:.3}", "mean", gap.mean, gap.sd);
    }
    for r in &reports {
        for c in &r.classifiers {
            let _ = write!(
                text,
                "\nConfusion matrix, {} / {} (rows true, columns predicted)\n\n{}",
                r.mode.as_str(),
                c.name,
                c.confusion.render()
            );
        }
    }
    if let Some(curve) = &elbow {
        let _ = writeln!(text, "\nElbow curve\n\nk,wcss");
        for (k, w) in &curve.points {
            let _ = writeln!(text, "{k},{w:.6}");
        }
        write(
            &out.join(ELBOW_SVG_FILE),
            &elbow_svg(curve, &cfg.snapshot_pairs()),
        )?;
    }
    let path = out.join(REPORT_FILE);
    write(&path, &text)?;
    Ok(format!(
        "report: {} eval reports{}{} -> {}",
        reports.len(),
        if gap.is_some() { ", gap" } else { "" },
        if elbow.is_some() { ", elbow.svg" } else { "" },
        path.display()
    ))
}
