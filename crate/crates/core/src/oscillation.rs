//! Damped vs. self-sustaining classification of reservoir activity.
//!
//! A unit oscillates when the trailing window of its signal both moves
//! (standard deviation above an amplitude floor) and carries a non-trivial
//! share of its non-DC power in a single periodogram bin. The second test
//! is loose on purpose: chaotic but sustained activity counts as oscillation.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::periodogram;
use crate::reservoir::StateTrajectory;

pub const DEFAULT_WINDOW: usize = 100;
pub const MIN_WINDOW: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Minimum standard deviation of the analysis window.
    pub amplitude_floor: f64,
    /// Minimum share of non-DC power in the strongest bin.
    pub power_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { amplitude_floor: 1e-3, power_fraction: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitClassification {
    pub is_oscillating: bool,
    pub dominant_bin: Option<usize>,
    pub tail_stddev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub per_unit: Vec<UnitClassification>,
    pub reservoir_is_self_oscillatory: bool,
    /// `None` when fewer than two units oscillate.
    pub phase_locked: Option<bool>,
    pub window: usize,
    pub thresholds: Thresholds,
}

impl OscillationReport {
    pub fn oscillating_count(&self) -> usize {
        self.per_unit.iter().filter(|u| u.is_oscillating).count()
    }

    pub fn dominant_bins(&self) -> Vec<usize> {
        self.per_unit.iter().filter_map(|u| u.dominant_bin).collect()
    }

    /// Largest share of oscillating units whose dominant bins fall within
    /// ±1 of a common bin. `None` without oscillating units.
    pub fn locked_fraction(&self) -> Option<f64> {
        let bins = self.dominant_bins();
        if bins.is_empty() {
            return None;
        }
        let best =
            bins.iter().map(|&center| bins.iter().filter(|&&b| b.abs_diff(center) <= 1).count()).max().unwrap_or(0);
        Some(best as f64 / bins.len() as f64)
    }
}

pub fn classify_unit(signal: &[f64], window: usize) -> Result<UnitClassification> {
    classify_unit_with(signal, window, &Thresholds::default())
}

pub fn classify_unit_with(signal: &[f64], window: usize, thresholds: &Thresholds) -> Result<UnitClassification> {
    if window < MIN_WINDOW {
        return Err(Error::input(format!("window must be at least {MIN_WINDOW}, got {window}")));
    }
    if window > signal.len() {
        return Err(Error::input(format!("window {window} is longer than the signal ({} samples)", signal.len())));
    }
    let tail = &signal[signal.len() - window..];
    let mean = tail.iter().sum::<f64>() / window as f64;
    let tail_stddev = (tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / window as f64).sqrt();

    let not_oscillating = UnitClassification { is_oscillating: false, dominant_bin: None, tail_stddev };
    if !(tail_stddev > thresholds.amplitude_floor) {
        return Ok(not_oscillating);
    }
    let spectrum = periodogram(tail)?;
    let non_dc: f64 = spectrum.bin_power[1..].iter().sum();
    match spectrum.peak() {
        Some((bin, power)) if non_dc > 0.0 && power / non_dc > thresholds.power_fraction => {
            Ok(UnitClassification { is_oscillating: true, dominant_bin: Some(bin), tail_stddev })
        }
        _ => Ok(not_oscillating),
    }
}

pub fn classify_trajectory(trajectory: &StateTrajectory, window: usize) -> Result<OscillationReport> {
    classify_trajectory_with(trajectory, window, &Thresholds::default())
}

pub fn classify_trajectory_with(
    trajectory: &StateTrajectory,
    window: usize,
    thresholds: &Thresholds,
) -> Result<OscillationReport> {
    if trajectory.steps() < window {
        return Err(Error::input(format!(
            "trajectory has {} steps, shorter than the window {window}",
            trajectory.steps()
        )));
    }
    let per_unit = (0..trajectory.n())
        .map(|i| classify_unit_with(&trajectory.unit(i), window, thresholds))
        .collect::<Result<Vec<_>>>()?;
    Ok(build_report(per_unit, window, *thresholds))
}

pub(crate) fn build_report(
    per_unit: Vec<UnitClassification>,
    window: usize,
    thresholds: Thresholds,
) -> OscillationReport {
    let mut report = OscillationReport {
        reservoir_is_self_oscillatory: per_unit.iter().any(|u| u.is_oscillating),
        per_unit,
        phase_locked: None,
        window,
        thresholds,
    };
    report.phase_locked = is_phase_locked(&report).ok();
    report
}

/// True iff every oscillating unit's dominant bin lies within ±1 of every
/// other's.
pub fn is_phase_locked(report: &OscillationReport) -> Result<bool> {
    let bins = report.dominant_bins();
    if bins.len() < 2 {
        return Err(Error::input(format!("phase locking needs at least 2 oscillating units, found {}", bins.len())));
    }
    let lo = bins.iter().min().copied().unwrap_or(0);
    let hi = bins.iter().max().copied().unwrap_or(0);
    Ok(hi - lo <= 1)
}

/// Strongest non-DC periodogram bin of the trailing `window` samples, with no
/// amplitude test. Useful for reading the frequency of a slowly decaying
/// signal that the classifier calls damped.
pub fn spectral_peak_bin(signal: &[f64], window: usize) -> Result<Option<usize>> {
    if window < MIN_WINDOW || window > signal.len() {
        return Err(Error::input(format!("window {window} must be in [{MIN_WINDOW}, {}]", signal.len())));
    }
    Ok(periodogram(&signal[signal.len() - window..])?.peak().map(|(bin, _)| bin))
}

/// Labelled synthetic signals (name, samples, expected verdict) covering
/// constant, decaying, damped, periodic, multi-tone and chaotic activity.
pub fn sanity_corpus() -> Vec<(&'static str, Vec<f64>, bool)> {
    let damped: Vec<f64> = (0..1000).map(|t| (-(t as f64) / 50.0).exp() * (0.3 * t as f64).sin()).collect();
    let decay: Vec<f64> = (0..1000).map(|t| 0.4 + 0.5 * (1.0 - t as f64 / 300.0).max(0.0)).collect();
    let sustained: Vec<f64> = (0..1000).map(|t| 0.8 * (TAU * 10.0 * t as f64 / 100.0).sin()).collect();
    let two_tone: Vec<f64> =
        (0..1000).map(|t| (TAU * 4.0 * t as f64 / 100.0).sin() + 0.6 * (TAU * 13.0 * t as f64 / 100.0).cos()).collect();
    let mut logistic = vec![0.3];
    for _ in 1..1000 {
        let x = *logistic.last().unwrap();
        logistic.push(3.9 * x * (1.0 - x));
    }
    vec![
        ("constant", vec![0.7; 1000], false),
        ("linear decay to constant", decay, false),
        ("damped sinusoid", damped, false),
        ("sustained sinusoid", sustained, true),
        ("two-tone sum", two_tone, true),
        ("logistic map r=3.9", logistic, true),
    ]
}

/// Converts a periodogram bin to a frequency in Hz.
pub fn dominant_frequency_hz(dominant_bin: usize, window: usize, dt: f64) -> Result<f64> {
    if dominant_bin == 0 {
        return Err(Error::input("bin 0 is the DC component, not a frequency"));
    }
    if dominant_bin * 2 > window {
        return Err(Error::input(format!("bin {dominant_bin} is above Nyquist for window {window}")));
    }
    if !(dt > 0.0) {
        return Err(Error::input(format!("dt must be positive, got {dt}")));
    }
    Ok(dominant_bin as f64 / (window as f64 * dt))
}
