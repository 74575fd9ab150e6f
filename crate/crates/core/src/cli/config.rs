//! Fully resolved run configurations. A configuration file and the
//! `config.echo.json` written by every command share this schema:
//! `{"command": "<name>", "config": {...}}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::LorenzParams;
use crate::oscillation::{Thresholds, DEFAULT_WINDOW, MIN_WINDOW};
use crate::readout::{DEFAULT_LAMBDA, DEFAULT_WASHOUT};
use crate::topology::{TopologyKind, TopologySpec};

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "SOESN_SEED";

/// The built-in seed, replaced by `SOESN_SEED` when that is set.
pub fn default_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not a non-negative integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RunConfig {
    Generate(GenerateConfig),
    Sweep(SweepConfig),
    InjectExperiment(InjectConfig),
    Reproduce(ReproduceConfig),
    TopologyDemo(DemoConfig),
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Generate(_) => "generate",
            RunConfig::Sweep(_) => "sweep",
            RunConfig::InjectExperiment(_) => "inject-experiment",
            RunConfig::Reproduce(_) => "reproduce",
            RunConfig::TopologyDemo(_) => "topology-demo",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            RunConfig::Generate(c) => c.topology.seed,
            RunConfig::Sweep(c) => c.seed,
            RunConfig::InjectExperiment(c) => c.seed,
            RunConfig::Reproduce(c) => c.seed,
            RunConfig::TopologyDemo(c) => c.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = match self {
            RunConfig::Generate(c) => c.validate(),
            RunConfig::Sweep(c) => c.validate(),
            RunConfig::InjectExperiment(c) => c.validate(),
            RunConfig::Reproduce(c) => c.validate(),
            RunConfig::TopologyDemo(c) => c.validate(),
        };
        r.map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("configs serialize");
        s.push('\n');
        s
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive, got {v}")))
    }
}

fn check_leak(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be in (0, 1], got {v}")))
    }
}

fn check_tau(tau: usize, window: usize) -> Result<()> {
    if tau < window {
        return Err(config_err(format!("tau = {tau} is shorter than the analysis window {window}")));
    }
    Ok(())
}

fn divisibility_hint(n: usize, m: usize) -> String {
    let lower = n / m * m;
    if lower == 0 {
        format!("n = {n} cannot hold {m} sub-reservoirs; use n = {m} or a multiple of it")
    } else {
        format!("n = {n} is not divisible by {m} sub-reservoirs; use n = {lower} or {}", lower + m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    /// `topology.seed` seeds the whole run: weights, initial state and leak
    /// rates are drawn from sub-streams of it.
    pub topology: TopologySpec,
    pub rho: f64,
    pub leak: f64,
    /// Per-neuron leak rates are drawn from N(leak, leak_sigma) when positive.
    pub leak_sigma: f64,
    pub tau: usize,
    pub window: usize,
    pub thresholds: Thresholds,
    /// Units drawn in `traces.svg`; 0 skips the plot.
    pub plot_units: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            topology: TopologySpec::dense(100, default_seed().unwrap_or(DEFAULT_SEED)),
            rho: 1.25,
            leak: 0.5,
            leak_sigma: 0.0,
            tau: 1000,
            window: DEFAULT_WINDOW,
            thresholds: Thresholds::default(),
            plot_units: 5,
        }
    }
}

impl GenerateConfig {
    fn validate(&self) -> Result<()> {
        check_topology(&self.topology)?;
        check_positive("rho", self.rho)?;
        check_leak("leak", self.leak)?;
        if !(self.leak_sigma >= 0.0 && self.leak_sigma.is_finite()) {
            return Err(config_err(format!("leak_sigma must be non-negative, got {}", self.leak_sigma)));
        }
        if self.window < MIN_WINDOW {
            return Err(config_err(format!("window must be at least {MIN_WINDOW}")));
        }
        check_tau(self.tau, self.window)
    }
}

fn check_topology(t: &TopologySpec) -> Result<()> {
    if t.kind.is_block() && t.sub_count > 0 && !t.n.is_multiple_of(t.sub_count) {
        return Err(config_err(divisibility_hint(t.n, t.sub_count)));
    }
    t.validate().map_err(|e| config_err(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub leak_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub trials: usize,
    pub n: usize,
    pub tau: usize,
    pub seed: u64,
}

/// 0.05, 0.10, ..., 1.00.
pub fn default_leak_values() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 20.0).collect()
}

/// 0.1, 0.2, ..., 3.0.
pub fn default_rho_values() -> Vec<f64> {
    (1..=30).map(|k| k as f64 / 10.0).collect()
}

/// `k` evenly spaced entries of `values`, always including the last.
pub fn thin(values: &[f64], k: usize) -> Vec<f64> {
    if k == 0 || k >= values.len() {
        return values.to_vec();
    }
    if k == 1 {
        return vec![values[values.len() - 1]];
    }
    (0..k).map(|i| values[(i * (values.len() - 1) + (k - 1) / 2) / (k - 1)]).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            leak_values: default_leak_values(),
            rho_values: default_rho_values(),
            trials: 100,
            n: 100,
            tau: 1000,
            seed: default_seed().unwrap_or(DEFAULT_SEED),
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.leak_values.is_empty() || self.rho_values.is_empty() {
            return Err(config_err("leak_values and rho_values must be non-empty"));
        }
        for &a in &self.leak_values {
            check_leak("every leak value", a)?;
        }
        for &r in &self.rho_values {
            check_positive("every rho value", r)?;
        }
        if self.trials == 0 || self.n == 0 {
            return Err(config_err("trials and n must be at least 1"));
        }
        check_tau(self.tau, DEFAULT_WINDOW)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectConfig {
    pub populations: Vec<usize>,
    pub trials: usize,
    pub tau: usize,
    pub rho: f64,
    pub leak: f64,
    pub seed: u64,
}

impl Default for InjectConfig {
    fn default() -> Self {
        Self {
            populations: vec![4, 10, 25, 50, 100],
            trials: 200,
            tau: 1000,
            rho: 1.25,
            leak: 0.5,
            seed: default_seed().unwrap_or(DEFAULT_SEED),
        }
    }
}

impl InjectConfig {
    fn validate(&self) -> Result<()> {
        if self.populations.is_empty() {
            return Err(config_err("populations must be non-empty"));
        }
        if let Some(n) = self.populations.iter().find(|n| **n < 2) {
            return Err(config_err(format!("every population must be at least 2, got {n}")));
        }
        if self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        check_positive("rho", self.rho)?;
        check_leak("leak", self.leak)?;
        check_tau(self.tau, DEFAULT_WINDOW)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// sin(2 pi freq t)
    Sine,
    /// 2t + 2 sin t, the integral of 2(1 + cos t)
    SineLiteral,
    /// sgn(sin 10 pi t)
    Square,
    /// Lorenz system (x, y, z)
    Lorenz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetConfig {
    pub kind: TargetKind,
    pub dt: f64,
    /// Sine frequency in Hz.
    pub freq: f64,
    pub x0: [f64; 3],
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Rescale each target dimension to zero mean and unit variance.
    pub standardize: bool,
}

impl Default for TargetConfig {
    fn default() -> Self {
        let l = LorenzParams::default();
        Self {
            kind: TargetKind::Sine,
            dt: l.dt,
            freq: 5.0,
            x0: l.x0,
            sigma: l.sigma,
            alpha: l.alpha,
            beta: l.beta,
            standardize: false,
        }
    }
}

impl TargetConfig {
    pub fn lorenz(&self) -> LorenzParams {
        LorenzParams { dt: self.dt, x0: self.x0, sigma: self.sigma, alpha: self.alpha, beta: self.beta }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproduceConfig {
    pub target: TargetConfig,
    pub tau: usize,
    /// `topology.seed` is ignored; trial seeds derive from `seed`.
    pub topology: TopologySpec,
    pub leak_mu: f64,
    pub leak_sigma: f64,
    pub rho: f64,
    pub lambda: f64,
    pub washout: usize,
    pub max_attempts: usize,
    pub trials: usize,
    /// When non-empty, every trial is repeated for each sub-reservoir count
    /// with `topology.n` fixed.
    pub sub_counts: Vec<usize>,
    pub seed: u64,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        Self {
            target: TargetConfig::default(),
            tau: 1000,
            topology: TopologySpec::weakly_coupled(504, 8, 0),
            leak_mu: 0.6,
            leak_sigma: 0.1,
            rho: 1.25,
            lambda: DEFAULT_LAMBDA,
            washout: DEFAULT_WASHOUT,
            max_attempts: 10,
            trials: 1,
            sub_counts: Vec::new(),
            seed: default_seed().unwrap_or(DEFAULT_SEED),
        }
    }
}

impl ReproduceConfig {
    fn validate(&self) -> Result<()> {
        if self.sub_counts.is_empty() {
            check_topology(&self.topology)?;
        } else {
            for &m in &self.sub_counts {
                if m == 0 || !self.topology.n.is_multiple_of(m) {
                    return Err(config_err(divisibility_hint(self.topology.n, m.max(1))));
                }
            }
            check_topology(&TopologySpec { kind: TopologyKind::WeaklyCoupled, sub_count: 1, ..self.topology.clone() })?;
        }
        check_positive("rho", self.rho)?;
        check_positive("lambda", self.lambda)?;
        check_positive("target.dt", self.target.dt)?;
        if !self.target.freq.is_finite() {
            return Err(config_err("target.freq must be finite"));
        }
        if !(self.leak_sigma >= 0.0 && self.leak_mu.is_finite()) {
            return Err(config_err("leak_mu must be finite and leak_sigma non-negative"));
        }
        if self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        if self.tau + 1 < self.washout + 2 {
            return Err(config_err(format!("tau = {} leaves no samples after washout {}", self.tau, self.washout)));
        }
        check_tau(self.tau, DEFAULT_WINDOW)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    pub n: usize,
    pub sub_count: usize,
    pub rho: f64,
    pub leak: f64,
    pub tau: usize,
    pub seed: u64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self { n: 100, sub_count: 4, rho: 1.25, leak: 0.5, tau: 1000, seed: default_seed().unwrap_or(DEFAULT_SEED) }
    }
}

impl DemoConfig {
    fn validate(&self) -> Result<()> {
        if self.sub_count == 0 || self.n == 0 || !self.n.is_multiple_of(self.sub_count) {
            return Err(config_err(divisibility_hint(self.n, self.sub_count.max(1))));
        }
        check_positive("rho", self.rho)?;
        check_leak("leak", self.leak)?;
        check_tau(self.tau, DEFAULT_WINDOW)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_for_every_command() {
        let configs = [
            RunConfig::Generate(GenerateConfig::default()),
            RunConfig::Sweep(SweepConfig::default()),
            RunConfig::InjectExperiment(InjectConfig::default()),
            RunConfig::Reproduce(ReproduceConfig::default()),
            RunConfig::TopologyDemo(DemoConfig::default()),
        ];
        for c in configs {
            let json = c.to_json();
            assert!(json.contains(&format!("\"command\": \"{}\"", c.command())));
            assert_eq!(RunConfig::from_json(&json).unwrap(), c);
            c.validate().unwrap();
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::from_json(r#"{"command":"sweep","config":{"trials":3,"bogus":1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"command":"sweep","config":{},"extra":1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"command":"nope","config":{}}"#).is_err());
        let partial = RunConfig::from_json(r#"{"command":"sweep","config":{"trials":3}}"#).unwrap();
        match partial {
            RunConfig::Sweep(s) => {
                assert_eq!(s.trials, 3);
                assert_eq!(s.rho_values.len(), 30);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn default_ranges_cover_the_sweep_domain() {
        let a = default_leak_values();
        let r = default_rho_values();
        assert_eq!((a.len(), a[0], a[19]), (20, 0.05, 1.0));
        assert_eq!((r.len(), r[0], r[29]), (30, 0.1, 3.0));
        assert_eq!(thin(&r, 1), vec![3.0]);
        assert_eq!(thin(&r, 2), vec![0.1, 3.0]);
        assert_eq!(thin(&r, 4).len(), 4);
        assert_eq!(thin(&r, 100), r);
    }

    #[test]
    fn validation_messages() {
        let bad = RunConfig::Generate(GenerateConfig { rho: 0.0, ..Default::default() });
        assert!(matches!(bad.validate(), Err(Error::Config(m)) if m.contains("rho")));
        let indivisible = RunConfig::Reproduce(ReproduceConfig {
            topology: TopologySpec::weakly_coupled(500, 8, 0),
            ..Default::default()
        });
        match indivisible.validate() {
            Err(Error::Config(m)) => assert!(m.contains("496") && m.contains("504"), "{m}"),
            other => panic!("{other:?}"),
        }
        let short = RunConfig::Generate(GenerateConfig { tau: 50, ..Default::default() });
        assert!(short.validate().is_err());
    }
}
