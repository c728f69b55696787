//! Windowing and the 15 per-window statistics.
//!
//! Index layout of a [`FeatureVector`]:
//!
//! | index  | feature                         |
//! |--------|---------------------------------|
//! | 0..=2  | APF x, y, z (peak count)        |
//! | 3      | variance of the three APF       |
//! | 4      | mean of raw z                   |
//! | 5..=7  | RMS of AC x, y, z               |
//! | 8..=10 | SD of AC x, y, z                |
//! | 11..=13| max − min of AC x, y, z         |
//! | 14     | Pearson correlation of AC y, z  |

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{Cohort, Recording};
use crate::preprocess::{separate, FilterConfig, SeparatedSignal};
use crate::{Error, Result};

pub const N_FEATURES: usize = 15;
/// Bumped whenever the index layout above changes.
pub const FEATURE_ORDER_VERSION: u32 = 1;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "apf_x", "apf_y", "apf_z", "var_apf", "z_mean", "rms_x", "rms_y", "rms_z", "sd_x", "sd_y",
    "sd_z", "minmax_x", "minmax_y", "minmax_z", "corr_yz",
];

pub const APF: usize = 0;
pub const VAR_APF: usize = 3;
pub const Z_MEAN: usize = 4;
pub const RMS: usize = 5;
pub const SD: usize = 8;
pub const MINMAX: usize = 11;
pub const CORR_YZ: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub length: usize,
    pub stride: usize,
}

impl Default for WindowSpec {
    /// 1 s windows with 50% overlap at 100 Hz.
    fn default() -> Self {
        WindowSpec {
            length: 100,
            stride: 50,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.stride > self.length {
            return Err(Error::InvalidHyperparam(format!(
                "window stride must be in 1..={}, got {}",
                self.length, self.stride
            )));
        }
        Ok(())
    }

    /// `floor((n - length) / stride) + 1`, or 0 when `n < length`.
    pub fn count(&self, n: usize) -> usize {
        if n < self.length {
            0
        } else {
            (n - self.length) / self.stride + 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A borrowed window over a separated signal.
#[derive(Debug, Clone, Copy)]
pub struct WindowView<'a> {
    sig: &'a SeparatedSignal,
    pub start: usize,
    pub len: usize,
}

impl<'a> WindowView<'a> {
    pub fn new(sig: &'a SeparatedSignal, start: usize, len: usize) -> Self {
        assert!(start + len <= sig.len(), "window out of bounds");
        WindowView { sig, start, len }
    }

    pub fn ac(&self, axis: usize) -> &'a [f64] {
        &self.sig.ac[axis][self.start..self.start + self.len]
    }

    pub fn raw_z(&self) -> &'a [f64] {
        &self.sig.raw_z[self.start..self.start + self.len]
    }
}

pub fn slide_windows<'a>(
    sig: &'a SeparatedSignal,
    spec: &WindowSpec,
) -> Result<Vec<WindowView<'a>>> {
    spec.validate()?;
    let n = sig.len();
    if n < spec.length {
        return Err(Error::SignalTooShort {
            len: n,
            window: spec.length,
        });
    }
    Ok((0..spec.count(n))
        .map(|i| WindowView::new(sig, i * spec.stride, spec.length))
        .collect())
}

/// Number of strict local maxima; plateaus never count.
pub fn count_peaks(series: &[f64]) -> usize {
    series
        .windows(3)
        .filter(|w| w[0] < w[1] && w[1] > w[2])
        .count()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

fn is_constant(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// Pearson correlation; 0 when either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || is_constant(a) || is_constant(b) {
        return 0.0;
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    (cov / (va * vb).sqrt()).clamp(-1.0, 1.0)
}

pub fn extract_features(window: &WindowView<'_>, spec: &WindowSpec) -> Result<FeatureVector> {
    if window.len != spec.length {
        return Err(Error::WindowLengthMismatch {
            expected: spec.length,
            actual: window.len,
        });
    }
    Ok(features_from_slices(
        [window.ac(0), window.ac(1), window.ac(2)],
        window.raw_z(),
    ))
}

/// The 15 statistics for one window of AC axes and raw z.
pub fn features_from_slices(ac: [&[f64]; 3], raw_z: &[f64]) -> FeatureVector {
    let mut f = [0.0; N_FEATURES];
    for (axis, series) in ac.iter().enumerate() {
        f[APF + axis] = count_peaks(series) as f64;
        let n = series.len() as f64;
        f[RMS + axis] = (series.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        f[SD + axis] = population_variance(series).sqrt();
        let max = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = series.iter().cloned().fold(f64::INFINITY, f64::min);
        f[MINMAX + axis] = max - min;
    }
    f[VAR_APF] = population_variance(&f[APF..APF + 3]);
    f[Z_MEAN] = mean(raw_z);
    f[CORR_YZ] = pearson(ac[1], ac[2]);
    FeatureVector(f)
}

/// One feature vector with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWindow {
    pub label: usize,
    pub subject_id: String,
    pub session_id: String,
    pub window_index: usize,
    pub vector: FeatureVector,
}

/// Separate, window and extract one recording.
pub fn extract_recording(
    rec: &Recording,
    label: usize,
    filter: &FilterConfig,
    spec: &WindowSpec,
) -> Result<Vec<FeatureWindow>> {
    let sig = separate(rec, filter)?;
    slide_windows(&sig, spec)?
        .iter()
        .enumerate()
        .map(|(window_index, w)| {
            Ok(FeatureWindow {
                label,
                subject_id: rec.subject_id.clone(),
                session_id: rec.session_id.clone(),
                window_index,
                vector: extract_features(w, spec)?,
            })
        })
        .collect()
}

/// Feature windows for every recording, ordered by (subject, session, window).
pub fn extract_all(
    cohort: &Cohort,
    filter: &FilterConfig,
    spec: &WindowSpec,
) -> Result<Vec<FeatureWindow>> {
    let per_recording = cohort
        .recordings
        .par_iter()
        .map(|rec| {
            let label = cohort
                .label_of(&rec.subject_id)
                .ok_or_else(|| Error::Internal(format!("unlabeled subject {}", rec.subject_id)))?;
            extract_recording(rec, label, filter, spec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_recording.into_iter().flatten().collect())
}

/// CSV `subject,recording,window_index,<15 names>`, preceded by `#` metadata
/// lines.
pub fn features_csv(windows: &[FeatureWindow], metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# feature_order_version={FEATURE_ORDER_VERSION}");
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("subject,recording,window_index");
    for name in FEATURE_NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for w in windows {
        let _ = write!(out, "{},{},{}", w.subject_id, w.session_id, w.window_index);
        for v in w.vector.0 {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Parses [`features_csv`] output. Labels are reassigned from the
/// lexicographic order of subject ids.
pub fn parse_features_csv(text: &str) -> Result<Vec<FeatureWindow>> {
    let err = |line: usize, msg: &str| Error::Parse {
        what: "features csv".into(),
        message: format!("line {line}: {msg}"),
    };
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(meta) = line.strip_prefix('#') {
            if let Some(v) = meta.trim().strip_prefix("feature_order_version=") {
                if v.trim() != FEATURE_ORDER_VERSION.to_string() {
                    return Err(err(i + 1, "unsupported feature order version"));
                }
            }
            continue;
        }
        if !saw_header {
            saw_header = true;
            if !line.starts_with("subject,recording,window_index") {
                return Err(err(i + 1, "missing header"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 + N_FEATURES {
            return Err(err(i + 1, "wrong field count"));
        }
        let window_index = fields[2]
            .parse()
            .map_err(|_| err(i + 1, "bad window index"))?;
        let mut v = [0.0; N_FEATURES];
        for (slot, field) in v.iter_mut().zip(&fields[3..]) {
            let x: f64 = field.parse().map_err(|_| err(i + 1, "bad number"))?;
            if !x.is_finite() {
                return Err(err(i + 1, "non-finite feature"));
            }
            *slot = x;
        }
        rows.push(FeatureWindow {
            label: 0,
            subject_id: fields[0].to_string(),
            session_id: fields[1].to_string(),
            window_index,
            vector: FeatureVector(v),
        });
    }
    let mut subjects: Vec<&str> = rows.iter().map(|r| r.subject_id.as_str()).collect();
    subjects.sort_unstable();
    subjects.dedup();
    let subjects: Vec<String> = subjects.into_iter().map(String::from).collect();
    for r in &mut rows {
        r.label = subjects.binary_search(&r.subject_id).unwrap_or(0);
    }
    Ok(rows)
}
