use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{spectral_radius, MIN_SCALABLE_RADIUS};
use crate::reservoir::{format_f64, init_state};
use crate::seeding::{derive, stream, Stream};
use crate::topology::build_dense;

use super::simulate;

/// Fraction of self-oscillatory reservoirs per (leak, rho) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub leak_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    /// `grid[i][j]` belongs to `leak_values[i]` and `rho_values[j]`.
    pub grid: Vec<Vec<f64>>,
    pub trials_per_cell: usize,
    pub n: usize,
    pub tau: usize,
    pub base_seed: u64,
}

impl SweepResult {
    pub fn ratio(&self, leak_index: usize, rho_index: usize) -> f64 {
        self.grid[leak_index][rho_index]
    }

    /// `leak,rho,ratio,trials`, one row per cell, leak-major.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "leak,rho,ratio,trials")?;
        for (i, a) in self.leak_values.iter().enumerate() {
            for (j, rho) in self.rho_values.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    format_f64(*a),
                    format_f64(*rho),
                    format_f64(self.grid[i][j]),
                    self.trials_per_cell
                )?;
            }
        }
        Ok(())
    }
}

/// Dense reservoirs of size `n`, `trials` per cell. Trial `k` uses the same
/// unscaled matrix and initial state in every cell, rescaled to each rho.
pub fn sweep_heatmap(
    leak_values: &[f64],
    rho_values: &[f64],
    trials: usize,
    n: usize,
    tau: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    if trials == 0 {
        return Err(Error::input("trials must be at least 1"));
    }
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    if leak_values.is_empty() || rho_values.is_empty() {
        return Err(Error::input("leak and rho ranges must be non-empty"));
    }
    if let Some(a) = leak_values.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::input(format!("leak values must be in (0, 1], got {a}")));
    }
    if let Some(r) = rho_values.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::input(format!("rho values must be positive, got {r}")));
    }

    let per_trial: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let seed = derive(base_seed, k as u64);
            let raw = build_dense(n, stream(seed, Stream::Weights))?;
            let base_rho = spectral_radius(&raw)?;
            if base_rho < MIN_SCALABLE_RADIUS {
                return Err(Error::CannotScale(base_rho));
            }
            let x0 = init_state(n, stream(seed, Stream::State))?;
            let mut hits = Vec::with_capacity(leak_values.len() * rho_values.len());
            for &a in leak_values {
                for &rho in rho_values {
                    let w = raw.scaled(rho / base_rho)?;
                    let (_, report) = simulate(w, vec![a; n], x0.clone(), tau)
                        .map_err(|e| Error::Numeric(format!("trial {k} at leak {a}, rho {rho}: {e}")))?;
                    hits.push(report.reservoir_is_self_oscillatory);
                }
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;

    let cols = rho_values.len();
    let grid = (0..leak_values.len())
        .map(|i| {
            (0..cols)
                .map(|j| {
                    let count = per_trial.iter().filter(|h| h[i * cols + j]).count();
                    count as f64 / trials as f64
                })
                .collect()
        })
        .collect();
    Ok(SweepResult {
        leak_values: leak_values.to_vec(),
        rho_values: rho_values.to_vec(),
        grid,
        trials_per_cell: trials,
        n,
        tau,
        base_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trial_is_bernoulli_and_deterministic() {
        let a = sweep_heatmap(&[0.3, 0.9], &[0.5, 1.5], 1, 20, 300, 4).unwrap();
        assert!(a.grid.iter().flatten().all(|r| *r == 0.0 || *r == 1.0));
        assert_eq!(a, sweep_heatmap(&[0.3, 0.9], &[0.5, 1.5], 1, 20, 300, 4).unwrap());
    }

    #[test]
    fn subcritical_radius_rarely_oscillates() {
        let s = sweep_heatmap(&[0.5], &[0.5], 200, 100, 1000, 1).unwrap();
        assert!(s.ratio(0, 0) <= 0.02);
    }

    #[test]
    fn csv_shape() {
        let s = sweep_heatmap(&[0.2, 0.4, 0.6], &[0.5, 1.0], 2, 10, 200, 0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "leak,rho,ratio,trials");
        assert_eq!(lines.len(), 1 + 6);
        assert!(lines[1].ends_with(",2"));
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(sweep_heatmap(&[0.0], &[1.0], 1, 5, 200, 0).is_err());
        assert!(sweep_heatmap(&[0.5], &[0.0], 1, 5, 200, 0).is_err());
        assert!(sweep_heatmap(&[0.5], &[1.0], 0, 5, 200, 0).is_err());
        assert!(sweep_heatmap(&[], &[1.0], 1, 5, 200, 0).is_err());
    }
}
