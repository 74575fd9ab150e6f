//! Reservoir weight matrices: dense, sparse, block-diagonal sub-reservoirs
//! and weakly coupled sub-reservoirs, plus self-oscillatory ensembles that
//! can be written into the leading block of any of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{scale_to_spectral_radius, RealMatrix};
use crate::oscillation::{classify_trajectory, DEFAULT_WINDOW};
use crate::reservoir::{init_state, Reservoir};
use crate::seeding::{stream, Stream};

pub const DEFAULT_DENSITY: f64 = 0.1;
pub const DEFAULT_COUPLING_SCALE: f64 = 0.05;
pub const DEFAULT_COUPLING_DENSITY: f64 = 0.05;
/// Clipping range for sampled leak rates.
pub const LEAK_RANGE: (f64, f64) = (0.05, 1.0);
/// Spectral radius the canonical ensemble is calibrated to.
pub const ENSEMBLE_RADIUS: f64 = 1.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Dense,
    Sparse,
    BlockDiagonal,
    WeaklyCoupled,
}

impl TopologyKind {
    pub fn is_block(self) -> bool {
        matches!(self, TopologyKind::BlockDiagonal | TopologyKind::WeaklyCoupled)
    }
}

/// Declarative description of a reservoir weight matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub n: usize,
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default = "default_sub_count")]
    pub sub_count: usize,
    #[serde(default = "default_coupling_scale")]
    pub coupling_scale: f64,
    #[serde(default = "default_coupling_density")]
    pub coupling_density: f64,
    #[serde(default)]
    pub inject_ensemble: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_density() -> f64 {
    DEFAULT_DENSITY
}
fn default_sub_count() -> usize {
    1
}
fn default_coupling_scale() -> f64 {
    DEFAULT_COUPLING_SCALE
}
fn default_coupling_density() -> f64 {
    DEFAULT_COUPLING_DENSITY
}

impl TopologySpec {
    pub fn new(kind: TopologyKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            density: DEFAULT_DENSITY,
            sub_count: 1,
            coupling_scale: DEFAULT_COUPLING_SCALE,
            coupling_density: DEFAULT_COUPLING_DENSITY,
            inject_ensemble: false,
            seed,
        }
    }

    pub fn dense(n: usize, seed: u64) -> Self {
        Self::new(TopologyKind::Dense, n, seed)
    }

    pub fn weakly_coupled(n: usize, sub_count: usize, seed: u64) -> Self {
        Self { sub_count, ..Self::new(TopologyKind::WeaklyCoupled, n, seed) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::input("n must be at least 1"));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::input(format!("density must be in (0, 1], got {}", self.density)));
        }
        if self.kind.is_block() {
            check_partition(self.n, self.sub_count)?;
        }
        if !(self.coupling_scale >= 0.0 && self.coupling_scale.is_finite()) {
            return Err(Error::input(format!("coupling_scale must be non-negative, got {}", self.coupling_scale)));
        }
        if !(0.0..=1.0).contains(&self.coupling_density) {
            return Err(Error::input(format!("coupling_density must be in [0, 1], got {}", self.coupling_density)));
        }
        if self.inject_ensemble && self.n < 2 {
            return Err(Error::input("ensemble injection needs n >= 2"));
        }
        Ok(())
    }

    /// Builds the matrix and rescales it to spectral radius `rho`.
    ///
    /// Dense and sparse matrices are rescaled as a whole. For block kinds each
    /// diagonal block is rescaled to `rho` on its own and the coupling is added
    /// afterwards, unscaled. An injected ensemble keeps its own calibrated
    /// weights.
    pub fn build(&self, rho: f64) -> Result<RealMatrix> {
        self.validate()?;
        let mut w = match self.kind {
            TopologyKind::Dense => scale_to_spectral_radius(&build_dense(self.n, self.seed)?, rho)?,
            TopologyKind::Sparse => scale_to_spectral_radius(&build_sparse(self.n, self.density, self.seed)?, rho)?,
            TopologyKind::BlockDiagonal | TopologyKind::WeaklyCoupled => {
                let mut w = build_block_diagonal(self.n, self.sub_count, self.seed)?;
                let side = self.n / self.sub_count;
                for m in 0..self.sub_count {
                    let block = scale_to_spectral_radius(&w.diagonal_block(m * side, side), rho)?;
                    w.write_block(m * side, m * side, &block)?;
                }
                if self.kind == TopologyKind::WeaklyCoupled {
                    add_coupling(&mut w, self.sub_count, self.coupling_scale, self.coupling_density, self.seed);
                }
                w
            }
        };
        if self.inject_ensemble {
            w = inject_ensemble(&w, &two_neuron_ensemble())?;
        }
        Ok(w)
    }
}

fn check_partition(n: usize, sub_count: usize) -> Result<()> {
    if sub_count == 0 {
        return Err(Error::input("sub_count must be at least 1"));
    }
    if n == 0 || !n.is_multiple_of(sub_count) {
        return Err(Error::input(format!("n = {n} is not divisible into {sub_count} equal sub-reservoirs")));
    }
    Ok(())
}

fn uniform_entry(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>() - 0.5
}

/// Dense matrix with i.i.d. uniform [-0.5, 0.5) entries.
pub fn build_dense(n: usize, seed: u64) -> Result<RealMatrix> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RealMatrix::new(n, n, (0..n * n).map(|_| uniform_entry(&mut rng)).collect())
}

/// Each entry is nonzero with probability `density`, uniform when nonzero.
pub fn build_sparse(n: usize, density: f64, seed: u64) -> Result<RealMatrix> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::input(format!("density must be in (0, 1], got {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * n).map(|_| if rng.random::<f64>() < density { uniform_entry(&mut rng) } else { 0.0 }).collect();
    RealMatrix::new(n, n, data)
}

/// `sub_count` dense blocks of side `n / sub_count` on the diagonal, zeros
/// elsewhere. Blocks are filled in order from one stream, so a single block
/// reproduces [`build_dense`] for the same seed.
pub fn build_block_diagonal(n: usize, sub_count: usize, seed: u64) -> Result<RealMatrix> {
    check_partition(n, sub_count)?;
    let side = n / sub_count;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = RealMatrix::zeros(n, n);
    for m in 0..sub_count {
        let block = RealMatrix::new(side, side, (0..side * side).map(|_| uniform_entry(&mut rng)).collect())?;
        w.write_block(m * side, m * side, &block)?;
    }
    Ok(w)
}

/// Block-diagonal sub-reservoirs plus sparse off-block coupling with entries
/// uniform in `[-0.5, 0.5) * coupling_scale`.
pub fn build_weakly_coupled(
    n: usize,
    sub_count: usize,
    coupling_scale: f64,
    coupling_density: f64,
    seed: u64,
) -> Result<RealMatrix> {
    if !(coupling_scale >= 0.0 && coupling_scale.is_finite()) {
        return Err(Error::input(format!("coupling_scale must be non-negative, got {coupling_scale}")));
    }
    if !(0.0..=1.0).contains(&coupling_density) {
        return Err(Error::input(format!("coupling_density must be in [0, 1], got {coupling_density}")));
    }
    let mut w = build_block_diagonal(n, sub_count, seed)?;
    add_coupling(&mut w, sub_count, coupling_scale, coupling_density, seed);
    Ok(w)
}

fn add_coupling(w: &mut RealMatrix, sub_count: usize, scale: f64, density: f64, seed: u64) {
    let n = w.rows();
    let side = n / sub_count;
    let mut rng = ChaCha8Rng::seed_from_u64(stream(seed, Stream::Coupling));
    let mut data = std::mem::replace(w, RealMatrix::zeros(1, 1)).into_vec();
    for i in 0..n {
        for j in 0..n {
            if i / side == j / side {
                continue;
            }
            if rng.random::<f64>() < density {
                data[i * n + j] = uniform_entry(&mut rng) * scale;
            }
        }
    }
    *w = RealMatrix::new(n, n, data).expect("coupling entries are finite");
}

/// A small self-oscillatory sub-network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub size: usize,
    pub weights: RealMatrix,
}

impl EnsembleSpec {
    /// Validates the weights: a 2x2 ensemble must have three excitatory and
    /// one inhibitory synapse, and every ensemble must sustain oscillation
    /// when run alone for 1000 steps at leak 0.5.
    pub fn new(weights: RealMatrix) -> Result<Self> {
        if !weights.is_square() || weights.rows() < 2 {
            return Err(Error::input("ensemble weights must be square with side >= 2"));
        }
        let size = weights.rows();
        if size == 2 {
            let pos = weights.as_slice().iter().filter(|&&v| v > 0.0).count();
            let neg = weights.as_slice().iter().filter(|&&v| v < 0.0).count();
            if (pos, neg) != (3, 1) {
                return Err(Error::input(format!(
                    "two-neuron ensemble needs 3 positive and 1 negative weights, got {pos} and {neg}"
                )));
            }
        }
        let mut r = Reservoir::with_scalar_leak(weights.clone(), 0.5, init_state(size, 0)?)?;
        let report = classify_trajectory(&r.run(1000)?, DEFAULT_WINDOW)?;
        if !report.reservoir_is_self_oscillatory {
            return Err(Error::input("ensemble does not sustain oscillation on its own"));
        }
        Ok(Self { size, weights })
    }
}

/// `[[1, 1], [-1, 1]]` rescaled to spectral radius 1.25: two neurons that
/// flip each other, eigenvalues on a rotating complex pair.
pub fn two_neuron_ensemble() -> EnsembleSpec {
    let raw = RealMatrix::from_rows(&[[1.0, 1.0], [-1.0, 1.0]]).expect("static matrix");
    let scaled = scale_to_spectral_radius(&raw, ENSEMBLE_RADIUS).expect("rotation matrix is scalable");
    EnsembleSpec::new(scaled).expect("canonical ensemble oscillates")
}

/// Replaces the leading `e.size x e.size` block of `w` with the ensemble.
pub fn inject_ensemble(w: &RealMatrix, e: &EnsembleSpec) -> Result<RealMatrix> {
    if !w.is_square() {
        return Err(Error::dim("reservoir weights must be square"));
    }
    if w.rows() < e.size {
        return Err(Error::input(format!("reservoir of size {} cannot hold an ensemble of size {}", w.rows(), e.size)));
    }
    let mut out = w.clone();
    out.write_block(0, 0, &e.weights)?;
    Ok(out)
}

/// Per-neuron leak rates drawn from N(mu, sigma) and clipped to [0.05, 1].
pub fn sample_leak_vector(n: usize, mu: f64, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    if !(sigma >= 0.0 && sigma.is_finite() && mu.is_finite()) {
        return Err(Error::input(format!("leak distribution N({mu}, {sigma}) is invalid")));
    }
    let normal =
        Normal::new(mu, sigma).map_err(|e| Error::input(format!("leak distribution N({mu}, {sigma}): {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| normal.sample(&mut rng).clamp(LEAK_RANGE.0, LEAK_RANGE.1)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::spectral_radius;
    use crate::oscillation::classify_trajectory;
    use proptest::prelude::*;

    fn nonzero_fraction(values: impl Iterator<Item = f64>) -> f64 {
        let (mut nz, mut total) = (0usize, 0usize);
        for v in values {
            total += 1;
            if v != 0.0 {
                nz += 1;
            }
        }
        nz as f64 / total as f64
    }

    #[test]
    fn dense_is_deterministic_and_bounded() {
        assert_eq!(build_dense(100, 7).unwrap(), build_dense(100, 7).unwrap());
        let w = build_dense(1000, 3).unwrap();
        let mean = w.as_slice().iter().sum::<f64>() / 1e6;
        assert!(mean.abs() <= 0.01);
        assert!(w.max_abs() <= 0.5);
        let small = build_dense(2, 1).unwrap();
        assert_eq!(small.as_slice().len(), 4);
        assert!(build_dense(0, 1).is_err());
    }

    #[test]
    fn sparse_density() {
        let w = build_sparse(100, 0.1, 5).unwrap();
        let f = nonzero_fraction(w.as_slice().iter().copied());
        assert!((0.07..=0.13).contains(&f), "{f}");
        assert_eq!(nonzero_fraction(build_sparse(50, 1.0, 5).unwrap().as_slice().iter().copied()), 1.0);
        assert!(build_sparse(10, 0.0, 1).is_err());
        assert!(build_sparse(10, 1.5, 1).is_err());
    }

    #[test]
    fn degenerate_sparse_cannot_be_scaled() {
        // At density 0.001 a 10x10 matrix is almost surely empty.
        let w = build_sparse(10, 0.001, 1).unwrap();
        assert_eq!(w.max_abs(), 0.0);
        assert!(matches!(scale_to_spectral_radius(&w, 1.25), Err(Error::CannotScale(_))));
    }

    #[test]
    fn block_structure() {
        let w = build_block_diagonal(4, 2, 9).unwrap();
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3), (2, 0), (2, 1), (3, 0), (3, 1)] {
            assert_eq!(w.get(i, j), 0.0);
        }
        assert_eq!(build_block_diagonal(100, 1, 4).unwrap(), build_dense(100, 4).unwrap());
        let w = build_block_diagonal(100, 4, 4).unwrap();
        let nonzero = w.as_slice().iter().filter(|v| **v != 0.0).count();
        assert!(nonzero <= 4 * 25 * 25);
        for i in 0..100 {
            for j in 0..100 {
                if i / 25 != j / 25 {
                    assert_eq!(w.get(i, j), 0.0);
                }
            }
        }
        assert!(build_block_diagonal(10, 3, 1).is_err());
    }

    #[test]
    fn weak_coupling_bounds() {
        let w = build_weakly_coupled(100, 4, 0.05, 0.05, 12).unwrap();
        let off: Vec<f64> = (0..100)
            .flat_map(|i| (0..100).map(move |j| (i, j)))
            .filter(|(i, j)| i / 25 != j / 25)
            .map(|(i, j)| w.get(i, j))
            .collect();
        let f = nonzero_fraction(off.iter().copied());
        assert!((0.02..=0.09).contains(&f), "{f}");
        assert!(off.iter().all(|v| v.abs() <= 0.025));
        assert_eq!(build_weakly_coupled(100, 4, 0.0, 0.3, 12).unwrap(), build_block_diagonal(100, 4, 12).unwrap());
        assert_eq!(build_weakly_coupled(100, 4, 0.5, 0.0, 12).unwrap(), build_block_diagonal(100, 4, 12).unwrap());
    }

    #[test]
    fn canonical_ensemble() {
        let e = two_neuron_ensemble();
        assert_eq!(e.size, 2);
        let w = e.weights.as_slice();
        assert_eq!(w.iter().filter(|v| **v > 0.0).count(), 3);
        assert_eq!(w.iter().filter(|v| **v < 0.0).count(), 1);
        assert!((spectral_radius(&e.weights).unwrap() - 1.25).abs() < 1e-12);

        // Eigenvalues of [[1,1],[-1,1]] are 1 ± i: trace 2, determinant 2.
        let s = 1.25 / 2f64.sqrt();
        let trace = w[0] + w[3];
        let det = w[0] * w[3] - w[1] * w[2];
        assert!((trace - 2.0 * s).abs() < 1e-12);
        assert!((det - 2.0 * s * s).abs() < 1e-12);
        assert!(trace * trace - 4.0 * det < 0.0, "complex pair");

        let mut r = Reservoir::with_scalar_leak(e.weights.clone(), 0.5, init_state(2, 3).unwrap()).unwrap();
        let report = classify_trajectory(&r.run(1000).unwrap(), 100).unwrap();
        assert!(report.per_unit.iter().all(|u| u.is_oscillating && u.tail_stddev > 0.01));
        assert_eq!(report.per_unit[0].dominant_bin, report.per_unit[1].dominant_bin);
        assert_eq!(report.phase_locked, Some(true));
    }

    #[test]
    fn ensemble_validation_rejects_bad_weights() {
        let all_positive = RealMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(EnsembleSpec::new(all_positive).is_err());
        // Right sign pattern, but too weak to sustain anything.
        let weak = RealMatrix::from_rows(&[[0.1, 0.1], [-0.1, 0.1]]).unwrap();
        assert!(EnsembleSpec::new(weak).is_err());
    }

    #[test]
    fn injection_is_local() {
        let e = two_neuron_ensemble();
        let w2 = build_dense(2, 1).unwrap();
        assert_eq!(inject_ensemble(&w2, &e).unwrap(), e.weights);

        let w = build_dense(100, 1).unwrap();
        let injected = inject_ensemble(&w, &e).unwrap();
        let changed = w.as_slice().iter().zip(injected.as_slice()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 4);
        assert_eq!(inject_ensemble(&injected, &e).unwrap(), injected);
        assert!(inject_ensemble(&build_dense(1, 1).unwrap(), &e).is_err());
    }

    #[test]
    fn leak_sampling() {
        assert_eq!(sample_leak_vector(5, 0.3, 0.0, 1).unwrap(), vec![0.3; 5]);
        assert_eq!(sample_leak_vector(5, 0.01, 0.0, 1).unwrap(), vec![0.05; 5]);
        assert_eq!(sample_leak_vector(50, 1.5, 0.1, 1).unwrap(), vec![1.0; 50]);
        let v = sample_leak_vector(10_000, 0.6, 0.1, 2).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((0.59..=0.61).contains(&mean), "{mean}");
        assert!(v.iter().all(|a| (0.05..=1.0).contains(a)));
        assert!(sample_leak_vector(3, 0.5, -1.0, 1).is_err());
    }

    #[test]
    fn spec_build_rescales_blocks_independently() {
        let spec = TopologySpec { coupling_scale: 0.0, ..TopologySpec::weakly_coupled(40, 4, 3) };
        let w = spec.build(1.25).unwrap();
        for m in 0..4 {
            let rho = spectral_radius(&w.diagonal_block(m * 10, 10)).unwrap();
            assert!((rho - 1.25).abs() < 1e-6, "block {m}: {rho}");
        }
        let dense = TopologySpec::dense(30, 3).build(0.8).unwrap();
        assert!((spectral_radius(&dense).unwrap() - 0.8).abs() < 1e-6);

        let injected = TopologySpec { inject_ensemble: true, ..TopologySpec::dense(30, 3) }.build(0.8).unwrap();
        assert_eq!(injected.diagonal_block(0, 2), two_neuron_ensemble().weights);
    }

    #[test]
    fn spec_json_round_trip_and_strictness() {
        let spec = TopologySpec::weakly_coupled(64, 8, 11);
        let json = serde_json::to_string(&spec).unwrap();
        for key in
            ["kind", "n", "density", "sub_count", "coupling_scale", "coupling_density", "inject_ensemble", "seed"]
        {
            assert!(json.contains(&format!("\"{key}\"")), "{key}");
        }
        assert!(json.contains("\"weakly_coupled\""));
        assert_eq!(serde_json::from_str::<TopologySpec>(&json).unwrap(), spec);
        assert!(serde_json::from_str::<TopologySpec>(r#"{"kind":"dense","n":4,"bogus":1}"#).is_err());
        let minimal: TopologySpec = serde_json::from_str(r#"{"kind":"sparse","n":10}"#).unwrap();
        assert_eq!(minimal.density, DEFAULT_DENSITY);
    }

    #[test]
    fn spec_validation() {
        assert!(TopologySpec::weakly_coupled(10, 3, 0).validate().is_err());
        assert!(TopologySpec { density: 0.0, ..TopologySpec::dense(5, 0) }.validate().is_err());
        assert!(TopologySpec { coupling_scale: -1.0, ..TopologySpec::dense(5, 0) }.validate().is_err());
        assert!(TopologySpec { coupling_density: 2.0, ..TopologySpec::dense(5, 0) }.validate().is_err());
        assert!(TopologySpec::dense(0, 0).validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn builders_are_deterministic_and_bounded(seed in 0u64..10_000, m in 1usize..5, side in 1usize..8, scale in 0.0f64..2.0) {
            let n = m * side;
            let a = build_weakly_coupled(n, m, scale, 0.3, seed).unwrap();
            prop_assert_eq!(&a, &build_weakly_coupled(n, m, scale, 0.3, seed).unwrap());
            for i in 0..n {
                for j in 0..n {
                    let bound = if i / side == j / side { 0.5 } else { 0.5 * scale };
                    prop_assert!(a.get(i, j).abs() <= bound);
                }
            }
            let b = build_weakly_coupled(n, m, scale, 0.0, seed).unwrap();
            prop_assert_eq!(b, build_block_diagonal(n, m, seed).unwrap());
            prop_assert!(build_sparse(n, 0.4, seed).unwrap().max_abs() <= 0.5);
        }
    }
}
