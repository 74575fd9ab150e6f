//! Target signals for waveform reproduction.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RealMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSignal {
    pub name: String,
    pub dt: f64,
    /// `T x L`, one row per sample.
    pub values: RealMatrix,
}

impl TargetSignal {
    pub fn new(name: impl Into<String>, dt: f64, values: RealMatrix) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::input(format!("dt must be positive, got {dt}")));
        }
        if values.rows() < 2 {
            return Err(Error::input("a target signal needs at least 2 samples"));
        }
        Ok(Self { name: name.into(), dt, values })
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn dims(&self) -> usize {
        self.values.cols()
    }

    /// Per-dimension zero-mean, unit-variance copy. Constant columns are only
    /// centred.
    pub fn standardized(&self) -> Self {
        let (t, l) = (self.values.rows(), self.values.cols());
        let mut data = self.values.as_slice().to_vec();
        for j in 0..l {
            let col = self.values.column(j);
            let mean = col.iter().sum::<f64>() / t as f64;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t as f64).sqrt();
            let scale = if std > 0.0 { std } else { 1.0 };
            for i in 0..t {
                data[i * l + j] = (data[i * l + j] - mean) / scale;
            }
        }
        Self {
            name: format!("{}_standardized", self.name),
            dt: self.dt,
            values: RealMatrix::new(t, l, data).expect("standardized values are finite"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SineMode {
    /// `x(t) = 2t + 2 sin t`, the solution of `dx/dt = 2(1 + cos t)` with
    /// `x(0) = 0`. Grows without bound.
    LiteralOde,
    /// `sin(2 pi f t)`.
    PureSine,
}

fn check_tau(tau: usize) -> Result<()> {
    if tau < 2 {
        return Err(Error::input(format!("tau must be at least 2, got {tau}")));
    }
    Ok(())
}

fn column(name: &str, dt: f64, values: Vec<f64>) -> Result<TargetSignal> {
    let t = values.len();
    TargetSignal::new(name, dt, RealMatrix::new(t, 1, values)?)
}

/// `tau + 1` samples at `t = k dt`.
pub fn gen_sinusoid(tau: usize, dt: f64, mode: SineMode, freq: f64) -> Result<TargetSignal> {
    check_tau(tau)?;
    if !freq.is_finite() {
        return Err(Error::input(format!("frequency must be finite, got {freq}")));
    }
    let values = (0..=tau)
        .map(|k| {
            let t = k as f64 * dt;
            match mode {
                SineMode::LiteralOde => 2.0 * t + 2.0 * t.sin(),
                SineMode::PureSine => (TAU * freq * t).sin(),
            }
        })
        .collect();
    let name = match mode {
        SineMode::LiteralOde => "sine_literal_ode",
        SineMode::PureSine => "sine",
    };
    column(name, dt, values)
}

/// `sgn(sin 10 pi t)` with `sgn(0) = 0`. Zero crossings fall on `t = j / 10`;
/// samples within 1e-9 of one are mapped to 0 exactly instead of trusting the
/// rounding of `sin`.
pub fn gen_square(tau: usize, dt: f64) -> Result<TargetSignal> {
    check_tau(tau)?;
    let values = (0..=tau)
        .map(|k| {
            let half_periods = 10.0 * k as f64 * dt;
            if (half_periods - half_periods.round()).abs() < 1e-9 {
                0.0
            } else {
                let s = (PI * half_periods).sin();
                s.signum()
            }
        })
        .collect();
    column("square", dt, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorenzParams {
    pub dt: f64,
    pub x0: [f64; 3],
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self { dt: 0.01, x0: [0.0, 1.0, 1.05], sigma: 10.0, alpha: 28.0, beta: 2.667 }
    }
}

fn lorenz_rhs(s: [f64; 3], p: &LorenzParams) -> [f64; 3] {
    let [x, y, z] = s;
    [p.sigma * (y - x), x * (p.alpha - z) - y, x * y - p.beta * z]
}

/// One classical fourth-order Runge-Kutta step.
pub fn lorenz_rk4_step(s: [f64; 3], p: &LorenzParams) -> [f64; 3] {
    let h = p.dt;
    let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
    let k1 = lorenz_rhs(s, p);
    let k2 = lorenz_rhs(add(s, k1, h / 2.0), p);
    let k3 = lorenz_rhs(add(s, k2, h / 2.0), p);
    let k4 = lorenz_rhs(add(s, k3, h), p);
    let mut out = s;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// `tau + 1` samples of `(x, y, z)` starting at `x0`.
pub fn gen_lorenz(tau: usize, p: &LorenzParams) -> Result<TargetSignal> {
    check_tau(tau)?;
    if !(p.dt > 0.0 && p.dt.is_finite()) {
        return Err(Error::input(format!("dt must be positive, got {}", p.dt)));
    }
    let mut data = Vec::with_capacity(3 * (tau + 1));
    let mut s = p.x0;
    data.extend_from_slice(&s);
    for k in 1..=tau {
        s = lorenz_rk4_step(s, p);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("Lorenz integration diverged at step {k}")));
        }
        data.extend_from_slice(&s);
    }
    TargetSignal::new("lorenz", p.dt, RealMatrix::new(tau + 1, 3, data)?)
}
