//! Command-line front end. Flags are shorthand for fields of the JSON
//! configuration; the resolved configuration is echoed next to the outputs.

mod commands;
pub mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::topology::TopologyKind;

pub use commands::{execute, planned_files};
use config::{
    default_leak_values, default_rho_values, default_seed, thin, DemoConfig, GenerateConfig, InjectConfig,
    ReproduceConfig, RunConfig, SweepConfig, TargetKind, SEED_ENV,
};
pub use output::ECHO_FILE;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "soesn", version, about = "Autonomous self-oscillatory echo state reservoirs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build one reservoir, run it, classify its activity.
    Generate(GenerateArgs),
    /// Oscillation ratio over a grid of leak rates and spectral radii.
    Sweep(SweepArgs),
    /// Oscillation ratio with and without an injected two-neuron ensemble.
    InjectExperiment(InjectArgs),
    /// Train readouts that reproduce a target waveform.
    Reproduce(ReproduceArgs),
    /// Run one reservoir of each topology.
    TopologyDemo(DemoArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory [default: ./<command>-output]
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON configuration, e.g. a previous config.echo.json; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overwrite existing output files
    #[arg(long)]
    force: bool,
    /// Leave the generation timestamp out of SVG files
    #[arg(long)]
    deterministic: bool,
    /// Worker threads [default: all cores]; never changes the results
    #[arg(long, env = "SOESN_JOBS")]
    jobs: Option<usize>,
}

fn parse_kind(s: &str) -> std::result::Result<TopologyKind, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unknown topology {s:?}; expected dense, sparse, block_diagonal or weakly_coupled"))
}

#[derive(Args, Debug)]
struct TopologyArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: Option<TopologyKind>,
    #[arg(long)]
    n: Option<usize>,
    /// Sub-reservoir count for block topologies
    #[arg(long)]
    sub: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    coupling_scale: Option<f64>,
    #[arg(long)]
    coupling_density: Option<f64>,
    /// Write the two-neuron ensemble into the leading block
    #[arg(long)]
    inject: bool,
}

impl TopologyArgs {
    fn apply(&self, t: &mut crate::topology::TopologySpec) {
        set(&mut t.kind, self.kind);
        set(&mut t.n, self.n);
        set(&mut t.sub_count, self.sub);
        set(&mut t.density, self.density);
        set(&mut t.coupling_scale, self.coupling_scale);
        set(&mut t.coupling_density, self.coupling_density);
        if self.inject {
            t.inject_ensemble = true;
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    topology: TopologyArgs,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    leak: Option<f64>,
    /// Draw per-neuron leak rates from N(leak, leak_sigma)
    #[arg(long)]
    leak_sigma: Option<f64>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    amplitude_floor: Option<f64>,
    #[arg(long)]
    power_fraction: Option<f64>,
    /// Units drawn in traces.svg (0 disables the plot)
    #[arg(long)]
    plot_units: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',')]
    leak_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    rho_values: Option<Vec<f64>>,
    /// Use this many evenly spaced values from each default range
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct InjectArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',')]
    populations: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    leak: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    topology: TopologyArgs,
    #[arg(long, value_enum)]
    target: Option<TargetKind>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Sine frequency in Hz
    #[arg(long)]
    freq: Option<f64>,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    leak_mu: Option<f64>,
    #[arg(long)]
    leak_sigma: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    washout: Option<usize>,
    #[arg(long)]
    max_attempts: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Repeat every trial for each of these sub-reservoir counts
    #[arg(long, value_delimiter = ',')]
    sub_counts: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    sub: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    leak: Option<f64>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn load_base(common: &Common, command: &str) -> Result<Option<RunConfig>> {
    let Some(path) = &common.config else {
        return Ok(None);
    };
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let config = RunConfig::from_json(&text)?;
    if config.command() != command {
        return Err(Error::Config(format!("{} configures `{}`, not `{command}`", path.display(), config.command())));
    }
    Ok(Some(config))
}

macro_rules! base {
    ($common:expr, $variant:ident, $name:literal) => {
        match load_base($common, $name)? {
            Some(RunConfig::$variant(c)) => c,
            Some(_) => unreachable!("command checked in load_base"),
            None => Default::default(),
        }
    };
}

fn resolve(command: &Command) -> Result<(RunConfig, &Common)> {
    Ok(match command {
        Command::Generate(a) => {
            let mut c: GenerateConfig = base!(&a.common, Generate, "generate");
            a.topology.apply(&mut c.topology);
            set(&mut c.topology.seed, a.seed);
            set(&mut c.rho, a.rho);
            set(&mut c.leak, a.leak);
            set(&mut c.leak_sigma, a.leak_sigma);
            set(&mut c.tau, a.tau);
            set(&mut c.window, a.window);
            set(&mut c.thresholds.amplitude_floor, a.amplitude_floor);
            set(&mut c.thresholds.power_fraction, a.power_fraction);
            set(&mut c.plot_units, a.plot_units);
            (RunConfig::Generate(c), &a.common)
        }
        Command::Sweep(a) => {
            let mut c: SweepConfig = base!(&a.common, Sweep, "sweep");
            if let Some(k) = a.cells {
                c.leak_values = thin(&default_leak_values(), k);
                c.rho_values = thin(&default_rho_values(), k);
            }
            set(&mut c.leak_values, a.leak_values.clone());
            set(&mut c.rho_values, a.rho_values.clone());
            set(&mut c.trials, a.trials);
            set(&mut c.n, a.n);
            set(&mut c.tau, a.tau);
            set(&mut c.seed, a.seed);
            (RunConfig::Sweep(c), &a.common)
        }
        Command::InjectExperiment(a) => {
            let mut c: InjectConfig = base!(&a.common, InjectExperiment, "inject-experiment");
            set(&mut c.populations, a.populations.clone());
            set(&mut c.trials, a.trials);
            set(&mut c.tau, a.tau);
            set(&mut c.rho, a.rho);
            set(&mut c.leak, a.leak);
            set(&mut c.seed, a.seed);
            (RunConfig::InjectExperiment(c), &a.common)
        }
        Command::Reproduce(a) => {
            let mut c: ReproduceConfig = base!(&a.common, Reproduce, "reproduce");
            a.topology.apply(&mut c.topology);
            set(&mut c.target.kind, a.target);
            set(&mut c.target.dt, a.dt);
            set(&mut c.target.freq, a.freq);
            if a.standardize {
                c.target.standardize = true;
            }
            set(&mut c.tau, a.tau);
            set(&mut c.leak_mu, a.leak_mu);
            set(&mut c.leak_sigma, a.leak_sigma);
            set(&mut c.rho, a.rho);
            set(&mut c.lambda, a.lambda);
            set(&mut c.washout, a.washout);
            set(&mut c.max_attempts, a.max_attempts);
            set(&mut c.trials, a.trials);
            set(&mut c.sub_counts, a.sub_counts.clone());
            set(&mut c.seed, a.seed);
            (RunConfig::Reproduce(c), &a.common)
        }
        Command::TopologyDemo(a) => {
            let mut c: DemoConfig = base!(&a.common, TopologyDemo, "topology-demo");
            set(&mut c.n, a.n);
            set(&mut c.sub_count, a.sub);
            set(&mut c.rho, a.rho);
            set(&mut c.leak, a.leak);
            set(&mut c.tau, a.tau);
            set(&mut c.seed, a.seed);
            (RunConfig::TopologyDemo(c), &a.common)
        }
    })
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        _ if e.is_numeric() => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

fn run_command(command: &Command) -> Result<PathBuf> {
    default_seed()?;
    let (config, common) = resolve(command)?;
    config.validate()?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}-output", config.command())));
    output::check_overwrite(&out, &planned_files(&config), common.force)?;

    let stamp = (!common.deterministic).then(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("unix time {secs}")
    });
    let work = || execute(&config, stamp.as_deref());
    let artifacts = match common.jobs {
        Some(0) => return Err(Error::Config("--jobs must be at least 1".into())),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?
            .install(work)?,
        None => work()?,
    };
    output::write_artifacts(&out, &artifacts)?;
    Ok(out)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run_command(&cli.command) {
        Ok(out) => {
            eprintln!("wrote {}", out.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(ref m) if m.contains(SEED_ENV)) {
                eprintln!("hint: unset {SEED_ENV} or set it to an integer");
            }
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from([
            "soesn",
            "generate",
            "--n",
            "30",
            "--rho",
            "0.9",
            "--kind",
            "weakly-coupled",
            "--sub",
            "3",
            "--seed",
            "7",
        ])
        .unwrap();
        let (config, _) = resolve(&cli.command).unwrap();
        match config {
            RunConfig::Generate(c) => {
                assert_eq!(c.topology.n, 30);
                assert_eq!(c.topology.kind, TopologyKind::WeaklyCoupled);
                assert_eq!(c.topology.sub_count, 3);
                assert_eq!(c.topology.seed, 7);
                assert_eq!(c.rho, 0.9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Input("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Numeric("x".into())), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::CannotScale(0.0)), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), EXIT_IO);
        assert_eq!(main_with_args(["soesn", "generate", "--rho", "0", "--out", "/nonexistent/never"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["soesn", "frobnicate"]), EXIT_CONFIG);
    }
}
