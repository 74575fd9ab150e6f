//! The autonomous reservoir: `x' = (1 - a) x + a tanh(W x)` with no input
//! and no output feedback.

use std::io::{BufRead, Write};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::RealMatrix;

/// Draws whose largest magnitude is below this are redrawn; a zero state is a
/// fixed point and never starts oscillating.
pub const MIN_KICK: f64 = 1e-6;

/// Initial state, i.i.d. uniform on [-0.5, 0.5), deterministic per seed.
pub fn init_state(n: usize, seed: u64) -> Result<Vec<f64>> {
    init_state_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Same as [`init_state`] with a caller-supplied generator.
pub fn init_state_with<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::input("state size must be at least 1"));
    }
    loop {
        let state: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        if state.iter().any(|v| v.abs() >= MIN_KICK) {
            return Ok(state);
        }
    }
}

#[derive(Clone, Debug)]
pub struct Reservoir {
    weights: RealMatrix,
    leak: Vec<f64>,
    state: Vec<f64>,
    step_count: u64,
    drive: Vec<f64>,
}

impl Reservoir {
    pub fn new(weights: RealMatrix, leak: Vec<f64>, state: Vec<f64>) -> Result<Self> {
        if !weights.is_square() {
            return Err(Error::dim(format!(
                "reservoir weights must be square, got {}x{}",
                weights.rows(),
                weights.cols()
            )));
        }
        let n = weights.rows();
        if leak.len() != n || state.len() != n {
            return Err(Error::dim(format!(
                "reservoir of size {n} given leak of length {} and state of length {}",
                leak.len(),
                state.len()
            )));
        }
        if let Some(i) = leak.iter().position(|&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::input(format!("leak[{i}] = {} is outside (0, 1]", leak[i])));
        }
        if let Some(i) = state.iter().position(|v| !(v.abs() <= 1.0)) {
            return Err(Error::input(format!("state[{i}] = {} is outside [-1, 1]", state[i])));
        }
        Ok(Self { weights, leak, state, step_count: 0, drive: vec![0.0; n] })
    }

    /// Reservoir with a uniform leak rate.
    pub fn with_scalar_leak(weights: RealMatrix, leak: f64, state: Vec<f64>) -> Result<Self> {
        let n = weights.rows();
        Self::new(weights, vec![leak; n], state)
    }

    pub fn n(&self) -> usize {
        self.state.len()
    }

    pub fn weights(&self) -> &RealMatrix {
        &self.weights
    }

    pub fn leak(&self) -> &[f64] {
        &self.leak
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Advances the state by one tick.
    pub fn step(&mut self) -> Result<()> {
        self.weights.mul_vec_into(&self.state, &mut self.drive);
        for (i, ((x, &a), &d)) in self.state.iter_mut().zip(&self.leak).zip(&self.drive).enumerate() {
            let next = (1.0 - a) * *x + a * d.tanh();
            if !next.is_finite() {
                return Err(Error::Numeric(format!("unit {i} became non-finite at step {}", self.step_count + 1)));
            }
            *x = next;
        }
        self.step_count += 1;
        Ok(())
    }

    /// Runs `tau` steps and records every state, including the starting one.
    pub fn run(&mut self, tau: usize) -> Result<StateTrajectory> {
        if tau == 0 {
            return Err(Error::input("tau must be at least 1"));
        }
        let n = self.n();
        let mut rows = Vec::with_capacity((tau + 1) * n);
        rows.extend_from_slice(&self.state);
        for t in 0..tau {
            self.step().map_err(|e| match e {
                Error::Numeric(msg) => Error::Numeric(format!("timestep {t}: {msg}")),
                other => other,
            })?;
            rows.extend_from_slice(&self.state);
        }
        Ok(StateTrajectory { n, rows })
    }
}

/// Time-major record of reservoir states; row `t` is `x_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTrajectory {
    n: usize,
    rows: Vec<f64>,
}

impl StateTrajectory {
    pub fn from_rows(n: usize, rows: Vec<f64>) -> Result<Self> {
        if n == 0 || rows.is_empty() || !rows.len().is_multiple_of(n) {
            return Err(Error::dim(format!("{} values do not form rows of width {n}", rows.len())));
        }
        Ok(Self { n, rows })
    }

    /// Number of recorded states (tau + 1).
    pub fn steps(&self) -> usize {
        self.rows.len() / self.n
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t * self.n..(t + 1) * self.n]
    }

    pub fn last(&self) -> &[f64] {
        self.row(self.steps() - 1)
    }

    /// Time series of one unit.
    pub fn unit(&self, i: usize) -> Vec<f64> {
        self.rows.iter().skip(i).step_by(self.n).copied().collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rows
    }

    /// The states as a `steps x n` matrix.
    pub fn to_matrix(&self) -> RealMatrix {
        RealMatrix::new(self.steps(), self.n, self.rows.clone()).expect("trajectory rows are finite and rectangular")
    }

    /// CSV with header `t,x0,x1,...`; floats use 17 significant digits so
    /// reading the file back is exact.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut line = String::from("t");
        for i in 0..self.n {
            line.push_str(&format!(",x{i}"));
        }
        writeln!(out, "{line}")?;
        for t in 0..self.steps() {
            line.clear();
            line.push_str(&t.to_string());
            for v in self.row(t) {
                line.push(',');
                line.push_str(&format_f64(*v));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Reads the format written by [`write_csv`](Self::write_csv). Leading
    /// `#` metadata lines are skipped.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().peekable();
        while let Some(Ok(l)) = lines.peek() {
            if !l.starts_with('#') {
                break;
            }
            lines.next();
        }
        let header = lines.next().ok_or_else(|| Error::input("empty trajectory CSV"))??;
        let n = header.split(',').count().saturating_sub(1);
        if !header.starts_with("t,") || n == 0 {
            return Err(Error::input(format!("unexpected trajectory header {header:?}")));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let mut fields = line.split(',');
            let t: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::input(format!("bad timestep on line {}", lineno + 2)))?;
            if t != lineno {
                return Err(Error::input(format!("expected timestep {lineno}, found {t}")));
            }
            let before = rows.len();
            for f in fields {
                rows.push(f.parse::<f64>().map_err(|e| Error::input(format!("data row {lineno}: {e}")))?);
            }
            if rows.len() - before != n {
                return Err(Error::dim(format!("data row {lineno} has the wrong width")));
            }
        }
        Self::from_rows(n, rows)
    }
}

/// Shortest decimal representation with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}
