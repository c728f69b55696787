//! Recordings on disk and in memory, plus a seeded synthetic gait generator.
//!
//! Corpus layout is `<root>/<subject_id>/<session_id>.csv`. Each file starts
//! with the header `timestamp_ms,ax,ay,az`; accelerations are in m/s² with
//! x sideways, y vertical and z forward/backward.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::seeding;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "timestamp_ms,ax,ay,az";
pub const NOMINAL_RATE_HZ: f64 = 100.0;
pub const STANDARD_GRAVITY: f64 = 9.81;

const SAMPLE_SPACING_MS: u64 = 10;
const DRIFT_FREQUENCY_HZ: f64 = 0.03;
const STEP_FREQUENCY_RANGE: (f64, f64) = (1.6, 2.4);
const SWAY_TIME_CONSTANT_S: f64 = 2.0;
const STRIDE_AMPLITUDE_SD: f64 = 0.15;
const STRIDE_PHASE_SD: f64 = 0.6;
const STRIDE_TEMPO_SD: f64 = 0.1;
const SWAY_SD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelSample {
    pub t_ms: u64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub subject_id: String,
    pub session_id: String,
    pub sample_rate_hz: f64,
    pub samples: Vec<AccelSample>,
}

impl Recording {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `subject/session`, used to tag derived rows.
    pub fn id(&self) -> String {
        format!("{}/{}", self.subject_id, self.session_id)
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| match axis {
                0 => s.ax,
                1 => s.ay,
                _ => s.az,
            })
            .collect()
    }

    /// A copy holding only `samples[range]`, same ids and rate.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Recording {
        Recording {
            subject_id: self.subject_id.clone(),
            session_id: self.session_id.clone(),
            sample_rate_hz: self.sample_rate_hz,
            samples: self.samples[range].to_vec(),
        }
    }
}

/// A set of recordings with a dense subject → class label map.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    /// Sorted by `(subject_id, session_id)`.
    pub recordings: Vec<Recording>,
    labels: BTreeMap<String, usize>,
}

impl Cohort {
    /// Builds the label map from the lexicographic order of subject ids.
    pub fn from_recordings(mut recordings: Vec<Recording>) -> Result<Self> {
        if recordings.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        recordings.sort_by(|a, b| {
            (a.subject_id.as_str(), a.session_id.as_str())
                .cmp(&(b.subject_id.as_str(), b.session_id.as_str()))
        });
        for pair in recordings.windows(2) {
            if pair[0].subject_id == pair[1].subject_id && pair[0].session_id == pair[1].session_id
            {
                return Err(Error::DuplicateSubjectSession {
                    subject: pair[0].subject_id.clone(),
                    session: pair[0].session_id.clone(),
                });
            }
        }
        let mut labels = BTreeMap::new();
        for rec in &recordings {
            let next = labels.len();
            labels.entry(rec.subject_id.clone()).or_insert(next);
        }
        Ok(Cohort { recordings, labels })
    }

    pub fn label_of(&self, subject_id: &str) -> Option<usize> {
        self.labels.get(subject_id).copied()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    /// Subject ids indexed by class label.
    pub fn subjects(&self) -> Vec<String> {
        self.labels.keys().cloned().collect()
    }
}

/// Parameters of one synthetic walker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub step_frequency_hz: f64,
    /// Fundamental amplitude per axis, m/s².
    pub amplitude: [f64; 3],
    /// Relative weights of the 2nd and 3rd harmonics.
    pub harmonic_weights: [f64; 2],
    /// Phase offset per axis, radians.
    pub phase: [f64; 3],
    /// Unit vector of gravity in the device frame.
    pub gravity: [f64; 3],
    pub noise_sd: f64,
    /// Amplitude of the slow gravity wobble, m/s².
    pub drift_amplitude: f64,
    /// Log-scale sd of the per-stride, per-axis amplitude factor.
    pub stride_amplitude_sd: f64,
    /// Sd of the per-stride, per-axis phase offset, radians.
    pub stride_phase_sd: f64,
    /// Relative sd of the per-stride step frequency.
    pub stride_tempo_sd: f64,
    /// Stationary sd of the postural sway added to the gravity direction.
    pub sway_sd: f64,
}

impl SynthParams {
    /// A motionless device with the given gravity orientation.
    pub fn stationary(gravity: [f64; 3]) -> Self {
        SynthParams {
            step_frequency_hz: 2.0,
            amplitude: [0.0; 3],
            harmonic_weights: [0.0; 2],
            phase: [0.0; 3],
            gravity,
            noise_sd: 0.0,
            drift_amplitude: 0.0,
            stride_amplitude_sd: 0.0,
            stride_phase_sd: 0.0,
            stride_tempo_sd: 0.0,
            sway_sd: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = STEP_FREQUENCY_RANGE;
        if !(lo..=hi).contains(&self.step_frequency_hz) {
            return Err(Error::InvalidParams(format!(
                "step frequency {} outside [{lo}, {hi}] Hz",
                self.step_frequency_hz
            )));
        }
        let non_negative = self
            .amplitude
            .iter()
            .chain(&self.harmonic_weights)
            .chain([
                &self.noise_sd,
                &self.drift_amplitude,
                &self.stride_amplitude_sd,
                &self.stride_phase_sd,
                &self.stride_tempo_sd,
                &self.sway_sd,
            ])
            .all(|v| v.is_finite() && *v >= 0.0);
        if !non_negative {
            return Err(Error::InvalidParams(
                "amplitudes, weights and variabilities must be finite and >= 0".into(),
            ));
        }
        if self.phase.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParams("phases must be finite".into()));
        }
        let norm = self.gravity.iter().map(|g| g * g).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "gravity orientation must have unit norm, got {norm}"
            )));
        }
        Ok(())
    }
}

/// Reads one recording; see the module docs for the format.
pub fn load_recording(path: &Path, subject_id: &str, session_id: &str) -> Result<Recording> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let samples = parse_samples(&text)?;
    Ok(Recording {
        subject_id: subject_id.to_string(),
        session_id: session_id.to_string(),
        sample_rate_hz: NOMINAL_RATE_HZ,
        samples,
    })
}

pub fn parse_samples(text: &str) -> Result<Vec<AccelSample>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == CSV_HEADER => {}
        _ => return Err(Error::MissingHeader),
    }
    let mut samples: Vec<AccelSample> = Vec::new();
    for (idx, raw) in lines.enumerate() {
        let line_no = idx + 2;
        let line = raw.trim_end_matches('\r');
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::MalformedRow(line_no));
        }
        let t_ms: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::MalformedRow(line_no))?;
        let mut values = [0.0; 3];
        for (v, field) in values.iter_mut().zip(&fields[1..]) {
            *v = field
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::MalformedRow(line_no))?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue(line_no));
            }
        }
        if let Some(prev) = samples.last() {
            if t_ms <= prev.t_ms {
                return Err(Error::NonMonotonicTimestamp(line_no));
            }
        }
        samples.push(AccelSample {
            t_ms,
            ax: values[0],
            ay: values[1],
            az: values[2],
        });
    }
    Ok(samples)
}

/// CSV text for a recording. `{}` on f64 prints the shortest string that
/// parses back to the same value, so load after save is exact.
pub fn format_samples(samples: &[AccelSample]) -> String {
    let mut out = String::with_capacity(samples.len() * 40 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(out, "{},{},{},{}", s.t_ms, s.ax, s.ay, s.az);
    }
    out
}

pub fn save_recording(rec: &Recording, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, format_samples(&rec.samples)).map_err(|e| Error::io(path, e))
}

/// Loads every `<root>/<subject>/<session>.csv`. Other files are ignored.
pub fn load_cohort(root: &Path) -> Result<Cohort> {
    let mut recordings = Vec::new();
    let mut subject_dirs: Vec<_> = read_dir_sorted(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    subject_dirs.sort();
    for dir in subject_dirs {
        let subject_id = file_name(&dir);
        for file in read_dir_sorted(&dir)? {
            let is_csv = file
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            if !file.is_file() || !is_csv {
                continue;
            }
            let session_id = file
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            recordings.push(load_recording(&file, &subject_id, &session_id)?);
        }
    }
    Cohort::from_recordings(recordings)
}

/// Writes a cohort in the corpus layout under `root`.
pub fn save_cohort(cohort: &Cohort, root: &Path) -> Result<()> {
    for rec in &cohort.recordings {
        let path = root
            .join(&rec.subject_id)
            .join(format!("{}.csv", rec.session_id));
        save_recording(rec, &path)?;
    }
    Ok(())
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort();
    Ok(entries)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Renders a synthetic walk of `round(duration_s * 100)` samples at 10 ms.
///
/// Each axis is gravity plus three harmonics of the step frequency, a slow
/// wobble, and white Gaussian noise drawn from `seed`.
pub fn synth_recording(params: &SynthParams, duration_s: f64, seed: u64) -> Result<Recording> {
    params.validate()?;
    if !duration_s.is_finite() || duration_s < 2.0 {
        return Err(Error::InvalidParams(format!(
            "duration must be >= 2 s, got {duration_s}"
        )));
    }
    let n = (duration_s * NOMINAL_RATE_HZ).round() as usize;
    let dt = 1.0 / NOMINAL_RATE_HZ;
    let mut rng = seeding::rng(seed);
    let unit = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let weights = [1.0, params.harmonic_weights[0], params.harmonic_weights[1]];
    let drift_omega = 2.0 * PI * DRIFT_FREQUENCY_HZ;
    let sway_rho = (-dt / SWAY_TIME_CONSTANT_S).exp();
    let sway_step = params.sway_sd * (1.0 - sway_rho * sway_rho).sqrt();

    // Stride cycle state: total phase in cycles, current tempo and gain.
    let mut cycles = 0.0_f64;
    let mut tempo = params.step_frequency_hz;
    let mut gain = [1.0; 3];
    let mut shift = [0.0; 3];
    let mut sway = [0.0; 3];

    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t_ms = i as u64 * SAMPLE_SPACING_MS;
        let t = t_ms as f64 / 1000.0;
        let mut gravity = params.gravity;
        if params.sway_sd > 0.0 {
            for s in sway.iter_mut() {
                *s = sway_rho * *s + sway_step * unit.sample(&mut rng);
            }
            let tilted = [0, 1, 2].map(|a| params.gravity[a] + sway[a]);
            let norm = tilted.iter().map(|g| g * g).sum::<f64>().sqrt();
            gravity = tilted.map(|g| g / norm);
        }
        let theta = 2.0 * PI * cycles;
        let mut v = [0.0; 3];
        for (axis, out) in v.iter_mut().enumerate() {
            let phi = params.phase[axis] + shift[axis];
            let gait: f64 = weights
                .iter()
                .enumerate()
                .map(|(h, w)| {
                    let h = (h + 1) as f64;
                    w * (h * (theta + phi)).sin()
                })
                .sum();
            let drift =
                params.drift_amplitude * (drift_omega * t + params.phase[axis] + axis as f64).sin();
            *out = STANDARD_GRAVITY * gravity[axis]
                + gain[axis] * params.amplitude[axis] * gait
                + drift;
            if params.noise_sd > 0.0 {
                *out += params.noise_sd * unit.sample(&mut rng);
            }
        }
        samples.push(AccelSample {
            t_ms,
            ax: v[0],
            ay: v[1],
            az: v[2],
        });

        let before = cycles.floor();
        cycles += tempo * dt;
        if cycles.floor() > before {
            // New stride: redraw its gain and tempo.
            if params.stride_amplitude_sd > 0.0 {
                for g in gain.iter_mut() {
                    *g = (params.stride_amplitude_sd * unit.sample(&mut rng)).exp();
                }
            }
            if params.stride_phase_sd > 0.0 {
                for p in shift.iter_mut() {
                    *p = params.stride_phase_sd * unit.sample(&mut rng);
                }
            }
            if params.stride_tempo_sd > 0.0 {
                let jitter = (params.stride_tempo_sd * unit.sample(&mut rng)).clamp(-0.3, 0.3);
                tempo = params.step_frequency_hz * (1.0 + jitter);
            }
        }
    }

    Ok(Recording {
        subject_id: "synthetic".into(),
        session_id: "session1".into(),
        sample_rate_hz: NOMINAL_RATE_HZ,
        samples,
    })
}

/// Draws the walker for subject `index` of `n_subjects`.
///
/// Step frequencies are spread evenly over [1.6, 2.4] Hz; everything else is
/// drawn from `subject_seed`.
pub fn synth_params(index: usize, n_subjects: usize, subject_seed: u64) -> SynthParams {
    let (lo, hi) = STEP_FREQUENCY_RANGE;
    let step_frequency_hz = if n_subjects <= 1 {
        (lo + hi) / 2.0
    } else {
        lo + (hi - lo) * index as f64 / (n_subjects - 1) as f64
    };
    let mut rng = seeding::rng(subject_seed);
    let amplitude = [
        rng.random_range(0.6..1.4),
        rng.random_range(1.2..2.4),
        rng.random_range(1.0..2.2),
    ];
    let harmonic_weights = [rng.random_range(0.15..0.6), rng.random_range(0.05..0.3)];
    let phase = [
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
    ];
    // Thigh-mounted phone: gravity mostly along y, tilted forward/sideways.
    let tilt = [
        rng.random_range(-0.05..0.05),
        1.0,
        rng.random_range(-0.09..0.09),
    ];
    let norm = tilt.iter().map(|g| g * g).sum::<f64>().sqrt();
    let gravity = tilt.map(|g| g / norm);
    SynthParams {
        step_frequency_hz,
        amplitude,
        harmonic_weights,
        phase,
        gravity,
        noise_sd: rng.random_range(0.25..0.45),
        drift_amplitude: rng.random_range(0.1..0.4),
        stride_amplitude_sd: STRIDE_AMPLITUDE_SD,
        stride_phase_sd: STRIDE_PHASE_SD,
        stride_tempo_sd: STRIDE_TEMPO_SD,
        sway_sd: SWAY_SD,
    }
}

/// A cohort of `n_subjects` synthetic walkers, one session each.
///
/// Subject `i` is named `subject_{i:03}` so lexicographic order equals index
/// order; its parameters come from `mix(master_seed, i)`.
pub fn synth_cohort(n_subjects: usize, duration_s: f64, master_seed: u64) -> Result<Cohort> {
    if n_subjects < 2 {
        return Err(Error::InvalidParams(format!(
            "need at least 2 subjects, got {n_subjects}"
        )));
    }
    let recordings = (0..n_subjects)
        .map(|i| {
            let subject_seed = seeding::mix(master_seed, i as u64);
            let params = synth_params(i, n_subjects, subject_seed);
            let mut rec = synth_recording(&params, duration_s, seeding::mix(subject_seed, 1))?;
            rec.subject_id = format!("subject_{i:03}");
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Cohort::from_recordings(recordings)
}
