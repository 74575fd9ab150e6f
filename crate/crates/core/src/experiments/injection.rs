use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::init_state;
use crate::seeding::{derive, stream, Stream};
use crate::topology::{inject_ensemble, two_neuron_ensemble, TopologySpec};

use super::simulate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectionRow {
    pub population: usize,
    pub ratio_without: f64,
    pub ratio_with: f64,
    pub trials: usize,
}

impl InjectionRow {
    pub fn gap(&self) -> f64 {
        self.ratio_with - self.ratio_without
    }
}

/// For each population, `trials` dense reservoirs rescaled to `rho` are run
/// twice from the same initial state: as built, and with the two-neuron
/// ensemble written over their leading block after rescaling.
pub fn injection_ratio_experiment(
    populations: &[usize],
    trials: usize,
    tau: usize,
    rho: f64,
    leak: f64,
    base_seed: u64,
) -> Result<Vec<InjectionRow>> {
    if trials == 0 {
        return Err(Error::input("trials must be at least 1"));
    }
    if let Some(n) = populations.iter().find(|n| **n < 2) {
        return Err(Error::input(format!("populations must be at least 2, got {n}")));
    }
    let ensemble = two_neuron_ensemble();
    populations
        .iter()
        .map(|&n| {
            let pop_seed = derive(base_seed, n as u64);
            let arms: Vec<(bool, bool)> = (0..trials)
                .into_par_iter()
                .map(|k| {
                    let seed = derive(pop_seed, k as u64);
                    let w = TopologySpec::dense(n, stream(seed, Stream::Weights)).build(rho)?;
                    let injected = inject_ensemble(&w, &ensemble)?;
                    let x0 = init_state(n, stream(seed, Stream::State))?;
                    let context = |e: Error| Error::Numeric(format!("population {n}, trial {k}: {e}"));
                    let (_, without) = simulate(w, vec![leak; n], x0.clone(), tau).map_err(context)?;
                    let (_, with) = simulate(injected, vec![leak; n], x0, tau).map_err(context)?;
                    Ok((without.reservoir_is_self_oscillatory, with.reservoir_is_self_oscillatory))
                })
                .collect::<Result<_>>()?;
            let ratio =
                |pick: fn(&(bool, bool)) -> bool| arms.iter().filter(|a| pick(a)).count() as f64 / trials as f64;
            Ok(InjectionRow { population: n, ratio_without: ratio(|a| a.0), ratio_with: ratio(|a| a.1), trials })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_neurons_with_injection_always_oscillate() {
        let rows = injection_ratio_experiment(&[2], 50, 1000, 1.25, 0.5, 3).unwrap();
        assert_eq!(rows[0].ratio_with, 1.0);
        assert_eq!(rows[0].trials, 50);
    }

    #[test]
    fn deterministic_and_validated() {
        let a = injection_ratio_experiment(&[4, 6], 20, 400, 1.25, 0.5, 9).unwrap();
        assert_eq!(a, injection_ratio_experiment(&[4, 6], 20, 400, 1.25, 0.5, 9).unwrap());
        assert_eq!(a.len(), 2);
        assert!(injection_ratio_experiment(&[1], 5, 400, 1.25, 0.5, 9).is_err());
        assert!(injection_ratio_experiment(&[4], 0, 400, 1.25, 0.5, 9).is_err());
    }
}
