//! Monte Carlo experiments over autonomous reservoirs.
//!
//! Every trial gets its own seed, `derive(base_seed, trial_index)`, and draws
//! its weights, initial state and leak rates from named sub-streams of that
//! seed. Trials run on the rayon pool and are collected in index order, so
//! results do not depend on the number of worker threads.

mod demo;
mod injection;
mod signals;
mod sweep;
mod waveform;

pub use demo::{topology_demo, DemoRun};
pub use injection::{injection_ratio_experiment, InjectionRow};
pub use signals::{gen_lorenz, gen_sinusoid, gen_square, lorenz_rk4_step, LorenzParams, SineMode, TargetSignal};
pub use sweep::{sweep_heatmap, SweepResult};
pub use waveform::{
    reproduce_waveform, reproduce_waveform_detailed, run_waveform_trials, subreservoir_count_sweep, CountSummary,
    TrialOutcome, WaveformConfig, WaveformFit,
};

use crate::error::Result;
use crate::numerics::RealMatrix;
use crate::oscillation::{classify_trajectory, OscillationReport, DEFAULT_WINDOW};
use crate::reservoir::{Reservoir, StateTrajectory};

/// Runs a fresh reservoir for `tau` steps and classifies the result.
pub fn simulate(
    weights: RealMatrix,
    leak: Vec<f64>,
    state: Vec<f64>,
    tau: usize,
) -> Result<(StateTrajectory, OscillationReport)> {
    let mut r = Reservoir::new(weights, leak, state)?;
    let trajectory = r.run(tau)?;
    let report = classify_trajectory(&trajectory, DEFAULT_WINDOW.min(trajectory.steps()))?;
    Ok((trajectory, report))
}

/// Median and quartiles by linear interpolation between order statistics.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some(Quartiles { q1: at(0.25), median: at(0.5), q3: at(0.75) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_interpolate() {
        let q = quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
        let q = quartiles(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (1.75, 2.5, 3.25));
        assert_eq!(quartiles(&[7.0]).unwrap().median, 7.0);
        assert!(quartiles(&[]).is_none());
    }
}
