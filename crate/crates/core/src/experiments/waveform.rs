use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::readout::{train_ridge, ReadoutModel, DEFAULT_LAMBDA, DEFAULT_WASHOUT};
use crate::reservoir::{init_state, StateTrajectory};
use crate::seeding::{derive, stream, Stream};
use crate::topology::{sample_leak_vector, TopologyKind, TopologySpec};

use super::{quartiles, simulate, Quartiles, TargetSignal};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformConfig {
    /// The `seed` field is replaced on every attempt.
    pub topology: TopologySpec,
    pub leak_mu: f64,
    pub leak_sigma: f64,
    pub rho: f64,
    pub lambda: f64,
    pub washout: usize,
    pub max_attempts: usize,
}

impl WaveformConfig {
    pub fn new(topology: TopologySpec) -> Self {
        Self {
            topology,
            leak_mu: 0.6,
            leak_sigma: 0.1,
            rho: 1.25,
            lambda: DEFAULT_LAMBDA,
            washout: DEFAULT_WASHOUT,
            max_attempts: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub attempt_count: usize,
    pub oscillatory: bool,
    /// Present iff `oscillatory`.
    pub train_nrmse: Option<Vec<f64>>,
    /// Seed of the last attempt made, or the trial seed if none was.
    pub seed: u64,
}

impl TrialOutcome {
    pub fn mean_nrmse(&self) -> Option<f64> {
        self.train_nrmse.as_ref().map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Outcome plus the trajectory and readout of the successful attempt.
#[derive(Clone, Debug)]
pub struct WaveformFit {
    pub outcome: TrialOutcome,
    pub trajectory: Option<StateTrajectory>,
    pub model: Option<ReadoutModel>,
}

pub fn reproduce_waveform(cfg: &WaveformConfig, target: &TargetSignal, trial_seed: u64) -> Result<TrialOutcome> {
    Ok(reproduce_waveform_detailed(cfg, target, trial_seed)?.outcome)
}

/// Draws reservoirs until one is self-oscillatory, then trains the readout
/// on its full trajectory against `target`. Running out of attempts is an
/// outcome, not an error.
pub fn reproduce_waveform_detailed(
    cfg: &WaveformConfig,
    target: &TargetSignal,
    trial_seed: u64,
) -> Result<WaveformFit> {
    validate(cfg, target)?;
    let tau = target.len() - 1;
    let n = cfg.topology.n;
    let mut seed = trial_seed;
    for attempt in 0..cfg.max_attempts {
        seed = derive(trial_seed, attempt as u64);
        let spec = TopologySpec { seed: stream(seed, Stream::Weights), ..cfg.topology.clone() };
        let w = spec.build(cfg.rho)?;
        let leak = sample_leak_vector(n, cfg.leak_mu, cfg.leak_sigma, stream(seed, Stream::Leak))?;
        let x0 = init_state(n, stream(seed, Stream::State))?;
        let (trajectory, report) =
            simulate(w, leak, x0, tau).map_err(|e| Error::Numeric(format!("attempt {attempt} (seed {seed}): {e}")))?;
        if !report.reservoir_is_self_oscillatory {
            continue;
        }
        let model = train_ridge(&trajectory.to_matrix(), &target.values, cfg.lambda, cfg.washout)?;
        let train_nrmse = model
            .train_nrmse
            .iter()
            .map(|v| v.ok_or_else(|| Error::UndefinedMetric("target is constant after washout".into())))
            .collect::<Result<Vec<f64>>>()?;
        return Ok(WaveformFit {
            outcome: TrialOutcome {
                attempt_count: attempt + 1,
                oscillatory: true,
                train_nrmse: Some(train_nrmse),
                seed,
            },
            trajectory: Some(trajectory),
            model: Some(model),
        });
    }
    Ok(WaveformFit {
        outcome: TrialOutcome { attempt_count: cfg.max_attempts, oscillatory: false, train_nrmse: None, seed },
        trajectory: None,
        model: None,
    })
}

fn validate(cfg: &WaveformConfig, target: &TargetSignal) -> Result<()> {
    cfg.topology.validate()?;
    if target.len() < cfg.washout + 2 {
        return Err(Error::input(format!(
            "target has {} samples; washout {} needs at least {}",
            target.len(),
            cfg.washout,
            cfg.washout + 2
        )));
    }
    for j in 0..target.dims() {
        let col = &target.values.column(j)[cfg.washout..];
        if col.iter().all(|v| *v == col[0]) {
            return Err(Error::input(format!("target dimension {j} is constant after washout")));
        }
    }
    Ok(())
}

/// `trials` independent runs of [`reproduce_waveform`]; trial `k` uses seed
/// `derive(base_seed, k)`.
pub fn run_waveform_trials(
    cfg: &WaveformConfig,
    target: &TargetSignal,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<TrialOutcome>> {
    validate(cfg, target)?;
    (0..trials).into_par_iter().map(|k| reproduce_waveform(cfg, target, derive(base_seed, k as u64))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountSummary {
    pub sub_count: usize,
    /// Mean-over-dimensions NRMSE of each oscillatory trial, in trial order.
    pub nrmse: Vec<f64>,
    pub quartiles: Option<Quartiles>,
    pub non_oscillatory: usize,
    pub outcomes: Vec<TrialOutcome>,
}

/// Weakly coupled reservoirs of fixed size `n` split into each of
/// `sub_counts` sub-reservoirs. Trial `k` has the same seed for every count.
pub fn subreservoir_count_sweep(
    n: usize,
    sub_counts: &[usize],
    target: &TargetSignal,
    trials: usize,
    cfg: &WaveformConfig,
    base_seed: u64,
) -> Result<Vec<CountSummary>> {
    if let Some(m) = sub_counts.iter().find(|m| **m == 0 || !n.is_multiple_of(**m)) {
        return Err(Error::input(format!("sub-reservoir count {m} does not divide n = {n}")));
    }
    sub_counts
        .iter()
        .map(|&m| {
            let topology = TopologySpec { kind: TopologyKind::WeaklyCoupled, n, sub_count: m, ..cfg.topology.clone() };
            let outcomes = run_waveform_trials(&WaveformConfig { topology, ..cfg.clone() }, target, trials, base_seed)?;
            let nrmse: Vec<f64> = outcomes.iter().filter_map(TrialOutcome::mean_nrmse).collect();
            Ok(CountSummary {
                sub_count: m,
                quartiles: quartiles(&nrmse),
                non_oscillatory: outcomes.iter().filter(|o| !o.oscillatory).count(),
                nrmse,
                outcomes,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{gen_sinusoid, SineMode};
    use crate::numerics::RealMatrix;
    use crate::readout::predict;

    fn small_cfg() -> WaveformConfig {
        WaveformConfig::new(TopologySpec::weakly_coupled(64, 4, 0))
    }

    #[test]
    fn zero_attempts_is_an_outcome() {
        let target = gen_sinusoid(300, 0.01, SineMode::PureSine, 5.0).unwrap();
        let cfg = WaveformConfig { max_attempts: 0, ..small_cfg() };
        let out = reproduce_waveform(&cfg, &target, 1).unwrap();
        assert!(!out.oscillatory);
        assert_eq!(out.attempt_count, 0);
        assert!(out.train_nrmse.is_none());
    }

    #[test]
    fn realizable_target_is_fit_exactly() {
        let sine = gen_sinusoid(400, 0.01, SineMode::PureSine, 5.0).unwrap();
        // Ridge bias has to be negligible for the fit to be exact.
        let cfg = WaveformConfig { lambda: 1e-20, ..small_cfg() };
        let fit = reproduce_waveform_detailed(&cfg, &sine, 2).unwrap();
        let x = fit.trajectory.unwrap().to_matrix();
        let model = fit.model.unwrap();
        let realizable = TargetSignal::new("realizable", 0.01, predict(&model, &x).unwrap()).unwrap();
        let again = reproduce_waveform(&cfg, &realizable, 2).unwrap();
        let e = again.train_nrmse.unwrap()[0];
        assert!(e < 1e-10, "{e}");
    }

    #[test]
    fn outcome_invariants_and_determinism() {
        let target = gen_sinusoid(400, 0.01, SineMode::PureSine, 5.0).unwrap();
        let a = run_waveform_trials(&small_cfg(), &target, 4, 11).unwrap();
        assert_eq!(a, run_waveform_trials(&small_cfg(), &target, 4, 11).unwrap());
        for o in &a {
            assert_eq!(o.train_nrmse.is_some(), o.oscillatory);
        }
    }

    #[test]
    fn rejects_short_or_constant_targets() {
        let short = gen_sinusoid(50, 0.01, SineMode::PureSine, 5.0).unwrap();
        assert!(reproduce_waveform(&small_cfg(), &short, 0).is_err());
        let flat = TargetSignal::new("flat", 0.01, RealMatrix::zeros(300, 1)).unwrap();
        assert!(reproduce_waveform(&small_cfg(), &flat, 0).is_err());
    }

    #[test]
    fn count_sweep_shapes() {
        let target = gen_sinusoid(300, 0.01, SineMode::PureSine, 5.0).unwrap();
        let s = subreservoir_count_sweep(32, &[1, 4], &target, 3, &small_cfg(), 5).unwrap();
        assert_eq!(s.iter().map(|c| c.sub_count).collect::<Vec<_>>(), vec![1, 4]);
        for c in &s {
            assert_eq!(c.outcomes.len(), 3);
            assert_eq!(c.nrmse.len() + c.non_oscillatory, 3);
        }
        assert!(subreservoir_count_sweep(32, &[5], &target, 1, &small_cfg(), 5).is_err());
    }
}
