use crate::error::Result;
use crate::oscillation::OscillationReport;
use crate::reservoir::{init_state, StateTrajectory};
use crate::seeding::{stream, Stream};
use crate::topology::{TopologyKind, TopologySpec};

use super::simulate;

#[derive(Clone, Debug)]
pub struct DemoRun {
    pub spec: TopologySpec,
    pub trajectory: StateTrajectory,
    pub report: OscillationReport,
}

/// One reservoir of each topology, all of size `n` and rescaled to `rho`,
/// started from the same state. Block kinds use `sub_count` sub-reservoirs.
pub fn topology_demo(n: usize, sub_count: usize, rho: f64, leak: f64, tau: usize, seed: u64) -> Result<Vec<DemoRun>> {
    let kinds = [TopologyKind::Dense, TopologyKind::Sparse, TopologyKind::BlockDiagonal, TopologyKind::WeaklyCoupled];
    let x0 = init_state(n, stream(seed, Stream::State))?;
    kinds
        .iter()
        .map(|&kind| {
            let sub_count = if kind.is_block() { sub_count } else { 1 };
            let spec = TopologySpec { sub_count, ..TopologySpec::new(kind, n, stream(seed, Stream::Weights)) };
            let (trajectory, report) = simulate(spec.build(rho)?, vec![leak; n], x0.clone(), tau)?;
            Ok(DemoRun { spec, trajectory, report })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_run_per_topology() {
        let runs = topology_demo(40, 4, 1.25, 0.5, 300, 1).unwrap();
        assert_eq!(runs.len(), 4);
        assert!(runs.iter().all(|r| r.trajectory.steps() == 301 && r.report.per_unit.len() == 40));
        assert_eq!(runs[0].trajectory.row(0), runs[3].trajectory.row(0));
        assert!(topology_demo(40, 3, 1.25, 0.5, 300, 1).is_err());
    }
}
