//! Word sequences and their normalized histograms.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::features::FeatureWindow;
use crate::{Error, Result};

/// How many consecutive windows form one histogram sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub segment_windows: usize,
    pub segment_stride: usize,
}

impl Default for SegmentSpec {
    fn default() -> Self {
        SegmentSpec {
            segment_windows: 20,
            segment_stride: 10,
        }
    }
}

impl SegmentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.segment_stride == 0 || self.segment_stride > self.segment_windows {
            return Err(Error::InvalidHyperparam(format!(
                "segment stride must be in 1..={}, got {}",
                self.segment_windows, self.segment_stride
            )));
        }
        Ok(())
    }

    pub fn count(&self, n: usize) -> usize {
        if n < self.segment_windows {
            0
        } else {
            (n - self.segment_windows) / self.segment_stride + 1
        }
    }
}

/// L1-normalized word counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowHistogram {
    pub label: usize,
    pub segment_index: usize,
    pub values: Vec<f64>,
}

/// Word ids for windows already ordered by `window_index`.
pub fn words_for_subject(windows: &[FeatureWindow], codebook: &Codebook) -> Result<Vec<usize>> {
    windows
        .iter()
        .map(|w| codebook.assign_word(w.vector.as_slice()))
        .collect()
}

fn normalized_counts(words: &[usize], k: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0.0; k];
    for &w in words {
        *counts.get_mut(w).ok_or(Error::DimensionMismatch {
            expected: k,
            actual: w + 1,
        })? += 1.0;
    }
    let n = words.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    Ok(counts)
}

/// One histogram per segment at offsets `0, stride, 2·stride, …`; the
/// trailing partial segment is dropped. Histograms carry label 0.
pub fn encode_segments(words: &[usize], spec: &SegmentSpec, k: usize) -> Result<Vec<BowHistogram>> {
    spec.validate()?;
    if words.len() < spec.segment_windows {
        return Err(Error::SequenceTooShort {
            len: words.len(),
            segment: spec.segment_windows,
        });
    }
    (0..spec.count(words.len()))
        .map(|i| {
            let start = i * spec.segment_stride;
            Ok(BowHistogram {
                label: 0,
                segment_index: i,
                values: normalized_counts(&words[start..start + spec.segment_windows], k)?,
            })
        })
        .collect()
}

/// A single histogram over the whole sequence.
pub fn encode_whole(words: &[usize], k: usize) -> Result<BowHistogram> {
    if words.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(BowHistogram {
        label: 0,
        segment_index: 0,
        values: normalized_counts(words, k)?,
    })
}

/// CSV `subject,segment_index,h0..h{k-1}` preceded by `#` metadata lines.
pub fn histograms_csv(
    rows: &[(String, BowHistogram)],
    k: usize,
    metadata: &[(String, String)],
) -> String {
    let mut out = String::new();
    for (key, v) in metadata {
        let _ = writeln!(out, "# {key}={v}");
    }
    out.push_str("subject,segment_index");
    for j in 0..k {
        let _ = write!(out, ",h{j}");
    }
    out.push('\n');
    for (subject, h) in rows {
        let _ = write!(out, "{subject},{}", h.segment_index);
        for v in &h.values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
