//! Gravity / body-motion separation.
//!
//! Each axis goes through the one-pole recurrence
//! `dc[m] = m1 * raw[m] + n1 * dc[m - 1]`; the body component is `raw - dc`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset_io::Recording;
use crate::{Error, Result};

/// Coefficients of the low-pass recurrence.
///
/// The default pair (0.0158, 0.9843) targets a 0.25 Hz cutoff at 100 Hz. It
/// sums to 1.0001, so the DC gain is `m1 / (1 - n1)` ≈ 1.00637 rather than 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub m1: f64,
    pub n1: f64,
    pub cutoff_hz: f64,
    pub sample_rate_hz: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            m1: 0.0158,
            n1: 0.9843,
            cutoff_hz: 0.25,
            sample_rate_hz: 100.0,
        }
    }
}

impl FilterConfig {
    /// Coefficients derived from a cutoff with [`coeffs_from_cutoff`].
    pub fn from_cutoff(cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        let (m1, n1) = coeffs_from_cutoff(cutoff_hz, sample_rate_hz)?;
        Ok(FilterConfig {
            m1,
            n1,
            cutoff_hz,
            sample_rate_hz,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.m1) || !in_unit(self.n1) {
            return Err(Error::InvalidHyperparam(format!(
                "filter coefficients must lie in (0, 1), got m1={} n1={}",
                self.m1, self.n1
            )));
        }
        Ok(())
    }

    /// Steady-state response to a constant input of 1.
    pub fn dc_gain(&self) -> f64 {
        self.m1 / (1.0 - self.n1)
    }
}

/// Exponential-smoothing coefficients for a cutoff: `m1 = 1 - exp(-2π fc / fs)`,
/// `n1 = 1 - m1`. At (0.25, 100) this gives m1 ≈ 0.01558, within 2% of the
/// default pair. The default pair itself is left unchanged.
pub fn coeffs_from_cutoff(cutoff_hz: f64, sample_rate_hz: f64) -> Result<(f64, f64)> {
    let nyquist_hz = sample_rate_hz / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist_hz) || !sample_rate_hz.is_finite() {
        return Err(Error::InvalidCutoff {
            cutoff_hz,
            nyquist_hz,
        });
    }
    let m1 = 1.0 - (-2.0 * PI * cutoff_hz / sample_rate_hz).exp();
    Ok((m1, 1.0 - m1))
}

/// Runs the low-pass recurrence, warm-started with `out[0] = series[0]`.
pub fn lowpass(series: &[f64], cfg: &FilterConfig) -> Result<Vec<f64>> {
    let first = *series.first().ok_or(Error::EmptySeries)?;
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(i));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut state = first;
    out.push(state);
    for &x in &series[1..] {
        state = cfg.m1 * x + cfg.n1 * state;
        out.push(state);
    }
    Ok(out)
}

/// Per-axis gravity and body components of one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatedSignal {
    /// Low-pass (gravity) series for x, y, z.
    pub dc: [Vec<f64>; 3],
    /// Body-motion series for x, y, z.
    pub ac: [Vec<f64>; 3],
    pub ac_magnitude: Vec<f64>,
    pub raw_z: Vec<f64>,
}

impl SeparatedSignal {
    pub fn len(&self) -> usize {
        self.raw_z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_z.is_empty()
    }

    /// Builds a signal directly from body components and raw z. The DC
    /// series are set so that `raw = dc + ac` on z and zero on x and y.
    pub fn from_parts(ac: [Vec<f64>; 3], raw_z: Vec<f64>) -> Self {
        let n = raw_z.len();
        let dc_z = raw_z.iter().zip(&ac[2]).map(|(r, a)| r - a).collect();
        let ac_magnitude = magnitude(&ac);
        SeparatedSignal {
            dc: [vec![0.0; n], vec![0.0; n], dc_z],
            ac,
            ac_magnitude,
            raw_z,
        }
    }
}

fn magnitude(ac: &[Vec<f64>; 3]) -> Vec<f64> {
    ac[0]
        .iter()
        .zip(&ac[1])
        .zip(&ac[2])
        .map(|((x, y), z)| (x * x + y * y + z * z).sqrt())
        .collect()
}

pub fn separate(rec: &Recording, cfg: &FilterConfig) -> Result<SeparatedSignal> {
    cfg.validate()?;
    let raw = [rec.axis(0), rec.axis(1), rec.axis(2)];
    let mut dc: [Vec<f64>; 3] = Default::default();
    let mut ac: [Vec<f64>; 3] = Default::default();
    for axis in 0..3 {
        dc[axis] = lowpass(&raw[axis], cfg)?;
        ac[axis] = raw[axis]
            .iter()
            .zip(&dc[axis])
            .map(|(r, d)| r - d)
            .collect();
    }
    let ac_magnitude = magnitude(&ac);
    let [_, _, raw_z] = raw;
    Ok(SeparatedSignal {
        dc,
        ac,
        ac_magnitude,
        raw_z,
    })
}

/// Debug dump of one axis as CSV `index,dc,ac`.
pub fn dump_axis_csv(sig: &SeparatedSignal, axis: usize) -> String {
    let mut out = String::from("index,dc,ac\n");
    for (i, (d, a)) in sig.dc[axis].iter().zip(&sig.ac[axis]).enumerate() {
        let _ = writeln!(out, "{i},{d},{a}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::{synth_recording, SynthParams};
    use proptest::prelude::*;

    #[test]
    fn zero_in_zero_out() {
        let out = lowpass(&[0.0; 50], &FilterConfig::default()).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_converges_to_geometric_limit() {
        let cfg = FilterConfig::default();
        // Closed form of the recurrence with warm start c:
        // out[m] = c * g + (c - c * g) * n1^m, g = m1 / (1 - n1).
        let c = 3.0;
        let g = cfg.m1 / (1.0 - cfg.n1);
        assert!((g - 1.006_369_426_751_592).abs() < 1e-12);
        let out = lowpass(&vec![c; 3000], &cfg).unwrap();
        for (m, v) in out.iter().enumerate().step_by(97) {
            let expected = c * g + (c - c * g) * cfg.n1.powi(m as i32);
            assert!((v - expected).abs() < 1e-9, "m={m} {v} vs {expected}");
        }
    }

    #[test]
    fn errors_on_bad_input() {
        let cfg = FilterConfig::default();
        assert!(matches!(lowpass(&[], &cfg), Err(Error::EmptySeries)));
        assert!(matches!(
            lowpass(&[1.0, f64::NAN], &cfg),
            Err(Error::NonFiniteInput(1))
        ));
    }

    #[test]
    fn cutoff_coefficients() {
        let (m1, n1) = coeffs_from_cutoff(0.25, 100.0).unwrap();
        let expected = 1.0 - (-std::f64::consts::PI / 200.0).exp();
        assert!((m1 - expected).abs() < 1e-15);
        assert!((m1 - 0.01558).abs() < 1e-5);
        assert!((n1 - 0.98442).abs() < 1e-5);
        assert!((m1 - 0.0158).abs() / 0.0158 < 0.02);
        assert!(matches!(
            coeffs_from_cutoff(60.0, 100.0),
            Err(Error::InvalidCutoff { .. })
        ));
        assert!(coeffs_from_cutoff(0.0, 100.0).is_err());
    }

    #[test]
    fn default_coefficients() {
        let cfg = FilterConfig::default();
        assert_eq!((cfg.m1, cfg.n1), (0.0158, 0.9843));
        assert_eq!((cfg.cutoff_hz, cfg.sample_rate_hz), (0.25, 100.0));
    }

    #[test]
    fn static_recording_settles() {
        let rec = synth_recording(&SynthParams::stationary([0.0, 0.0, 1.0]), 60.0, 0).unwrap();
        let cfg = FilterConfig::default();
        let sig = separate(&rec, &cfg).unwrap();
        // The default pair has gain slightly above one, so AC settles at a small offset.
        let offset = 9.81 * (1.0 - cfg.dc_gain());
        assert!((offset + 0.0625).abs() < 1e-3);
        assert!(sig.dc[2][5000..]
            .iter()
            .all(|d| (d / (9.81 * cfg.dc_gain()) - 1.0).abs() < 1e-3));
        assert!(sig.ac[2][5000..].iter().all(|a| (a - offset).abs() < 1e-3));
        let unit = separate(&rec, &FilterConfig::from_cutoff(0.25, 100.0).unwrap()).unwrap();
        assert!(unit.ac[2][5000..].iter().all(|a| a.abs() < 0.01));
        assert!(sig.ac[0].iter().all(|a| *a == 0.0));
        assert_eq!(sig.raw_z, rec.axis(2));
    }

    #[test]
    fn zero_recording_separates_to_zero() {
        let rec = synth_recording(&SynthParams::stationary([0.0, 0.0, 1.0]), 2.0, 0)
            .map(|mut r| {
                r.samples.iter_mut().for_each(|s| s.az = 0.0);
                r
            })
            .unwrap();
        let sig = separate(&rec, &FilterConfig::default()).unwrap();
        for axis in 0..3 {
            assert!(sig.dc[axis].iter().chain(&sig.ac[axis]).all(|v| *v == 0.0));
        }
        assert!(sig.ac_magnitude.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_hz_sine_passes_into_ac() {
        // |1 - H(e^{jw})| with H = m1 / (1 - n1 e^{-jw}), w = 2π·2/100.
        let cfg = FilterConfig::default();
        let w = 2.0 * PI * 2.0 / 100.0;
        let (re, im) = (1.0 - cfg.n1 * w.cos(), cfg.n1 * w.sin());
        let den = re * re + im * im;
        let h = (cfg.m1 * re / den, -cfg.m1 * im / den);
        let analytic = ((1.0 - h.0).powi(2) + h.1.powi(2)).sqrt();
        assert!((analytic - 0.984).abs() < 0.002);

        let z: Vec<f64> = (0..6000).map(|i| (w * i as f64).sin()).collect();
        let ac: Vec<f64> = z
            .iter()
            .zip(lowpass(&z, &cfg).unwrap())
            .map(|(r, d)| r - d)
            .collect();
        let tail = &ac[5500..];
        let amp = (tail.iter().cloned().fold(f64::MIN, f64::max)
            - tail.iter().cloned().fold(f64::MAX, f64::min))
            / 2.0;
        assert!((amp - analytic).abs() < 0.005, "{amp} vs {analytic}");
    }

    proptest! {
        #[test]
        fn decomposition_is_exact(values in prop::collection::vec(-50.0f64..50.0, 1..200)) {
            let n = values.len();
            let rec = Recording {
                subject_id: "p".into(),
                session_id: "s".into(),
                sample_rate_hz: 100.0,
                samples: values.iter().enumerate().map(|(i, v)| crate::dataset_io::AccelSample {
                    t_ms: i as u64 * 10, ax: *v, ay: -v, az: v * 0.5 + 9.81,
                }).collect(),
            };
            let sig = separate(&rec, &FilterConfig::default()).unwrap();
            prop_assert_eq!(sig.len(), n);
            for axis in 0..3 {
                let raw = rec.axis(axis);
                for ((r, d), a) in raw.iter().zip(&sig.dc[axis]).zip(&sig.ac[axis]) {
                    prop_assert!((r - d - a).abs() <= 1e-12);
                }
            }
            prop_assert!(sig.ac_magnitude.iter().all(|m| *m >= 0.0));
        }

        #[test]
        fn lowpass_is_linear(
            pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..300),
            a in -5.0f64..5.0,
            b in -5.0f64..5.0,
        ) {
            let cfg = FilterConfig::default();
            let s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let t: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let combo: Vec<f64> = s.iter().zip(&t).map(|(x, y)| a * x + b * y).collect();
            let ls = lowpass(&s, &cfg).unwrap();
            let lt = lowpass(&t, &cfg).unwrap();
            let lc = lowpass(&combo, &cfg).unwrap();
            for i in 0..s.len() {
                prop_assert!((lc[i] - (a * ls[i] + b * lt[i])).abs() <= 1e-9);
            }
        }
    }
}
