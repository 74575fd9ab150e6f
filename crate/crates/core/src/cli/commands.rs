use serde::Serialize;
use serde_json::json;

use crate::error::Result;
use crate::experiments::{
    gen_lorenz, gen_sinusoid, gen_square, injection_ratio_experiment, quartiles, reproduce_waveform_detailed,
    run_waveform_trials, subreservoir_count_sweep, sweep_heatmap, topology_demo, Quartiles, SineMode, TargetSignal,
    TrialOutcome, WaveformConfig,
};
use crate::oscillation::classify_trajectory_with;
use crate::plot::{box_plot, heatmap, line_chart, BoxGroup, Frame, Series};
use crate::readout::predict;
use crate::reservoir::{format_f64, init_state, Reservoir};
use crate::seeding::{derive, stream, Stream};
use crate::topology::{sample_leak_vector, TopologyKind, TopologySpec};

use super::config::{DemoConfig, GenerateConfig, InjectConfig, ReproduceConfig, RunConfig, SweepConfig, TargetKind};
use super::output::{Artifact, Metadata, ECHO_FILE};

/// Names of every file `config` will produce, known before running it.
pub fn planned_files(config: &RunConfig) -> Vec<String> {
    let mut names: Vec<String> = match config {
        RunConfig::Generate(c) => {
            let mut v = vec!["trajectory.csv".to_string(), "report.json".to_string()];
            if c.plot_units > 0 {
                v.push("traces.svg".into());
            }
            v
        }
        RunConfig::Sweep(_) => vec!["sweep.csv".into(), "heatmap.svg".into()],
        RunConfig::InjectExperiment(_) => vec!["injection.csv".into(), "injection.svg".into()],
        RunConfig::Reproduce(c) => {
            let mut v: Vec<String> =
                ["nrmse.json", "outcomes.jsonl", "boxplot.csv", "overlay.svg"].map(String::from).into();
            if !c.sub_counts.is_empty() {
                v.push("boxplot.svg".into());
            }
            v
        }
        RunConfig::TopologyDemo(_) => {
            let mut v: Vec<String> = DEMO_KINDS
                .iter()
                .flat_map(|k| [format!("{}_trajectory.csv", kind_name(*k)), format!("{}_report.json", kind_name(*k))])
                .collect();
            v.push("topology_demo.svg".into());
            v
        }
    };
    names.push(ECHO_FILE.into());
    names
}

const DEMO_KINDS: [TopologyKind; 4] =
    [TopologyKind::Dense, TopologyKind::Sparse, TopologyKind::BlockDiagonal, TopologyKind::WeaklyCoupled];

fn kind_name(kind: TopologyKind) -> String {
    serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

pub fn execute(config: &RunConfig, stamp: Option<&str>) -> Result<Vec<Artifact>> {
    let meta = Metadata::new(config);
    let mut artifacts = match config {
        RunConfig::Generate(c) => generate(c, &meta, stamp)?,
        RunConfig::Sweep(c) => sweep(c, &meta, stamp)?,
        RunConfig::InjectExperiment(c) => inject(c, &meta, stamp)?,
        RunConfig::Reproduce(c) => reproduce(c, &meta, stamp)?,
        RunConfig::TopologyDemo(c) => demo(c, &meta, stamp)?,
    };
    artifacts.push(Artifact::new(ECHO_FILE, config.to_json()));
    Ok(artifacts)
}

fn generate(c: &GenerateConfig, meta: &Metadata, stamp: Option<&str>) -> Result<Vec<Artifact>> {
    let seed = c.topology.seed;
    let n = c.topology.n;
    let w = TopologySpec { seed: stream(seed, Stream::Weights), ..c.topology.clone() }.build(c.rho)?;
    let leak = if c.leak_sigma > 0.0 {
        sample_leak_vector(n, c.leak, c.leak_sigma, stream(seed, Stream::Leak))?
    } else {
        vec![c.leak; n]
    };
    let mut reservoir = Reservoir::new(w, leak, init_state(n, stream(seed, Stream::State))?)?;
    let trajectory = reservoir.run(c.tau)?;
    let report = classify_trajectory_with(&trajectory, c.window, &c.thresholds)?;

    let mut csv = meta.csv_header().into_bytes();
    trajectory.write_csv(&mut csv)?;
    let mut out = vec![
        Artifact::new("trajectory.csv", String::from_utf8(csv).expect("CSV is UTF-8")),
        Artifact::new("report.json", meta.json_document("report", &report)),
    ];
    if c.plot_units > 0 {
        let series: Vec<Series> = (0..c.plot_units.min(n))
            .map(|i| {
                let unit = trajectory.unit(i);
                Series::new(format!("x{i}"), unit.iter().enumerate().map(|(t, v)| (t as f64, *v)).collect())
            })
            .collect();
        let title = format!("Unit activity (rho = {}, leak = {})", c.rho, c.leak);
        let frame = Frame { title: &title, x_label: "time step", y_label: "state", stamp };
        out.push(Artifact::new("traces.svg", line_chart(&frame, &series)));
    }
    Ok(out)
}

fn sweep(c: &SweepConfig, meta: &Metadata, stamp: Option<&str>) -> Result<Vec<Artifact>> {
    let result = sweep_heatmap(&c.leak_values, &c.rho_values, c.trials, c.n, c.tau, c.seed)?;
    let mut csv = meta.csv_header().into_bytes();
    result.write_csv(&mut csv)?;
    let title = format!("Self-oscillatory ratio (N = {}, {} trials per cell)", c.n, c.trials);
    let frame = Frame { title: &title, x_label: "spectral radius", y_label: "leaking rate", stamp };
    Ok(vec![
        Artifact::new("sweep.csv", String::from_utf8(csv).expect("CSV is UTF-8")),
        Artifact::new("heatmap.svg", heatmap(&frame, &result.rho_values, &result.leak_values, &result.grid)),
    ])
}

fn inject(c: &InjectConfig, meta: &Metadata, stamp: Option<&str>) -> Result<Vec<Artifact>> {
    let rows = injection_ratio_experiment(&c.populations, c.trials, c.tau, c.rho, c.leak, c.seed)?;
    let mut csv = meta.csv_header();
    csv.push_str("population,ratio_without,ratio_with,trials\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.population,
            format_f64(r.ratio_without),
            format_f64(r.ratio_with),
            r.trials
        ));
    }
    let points = |f: fn(&crate::experiments::InjectionRow) -> f64| {
        rows.iter().map(|r| (r.population as f64, f(r))).collect::<Vec<_>>()
    };
    let series = [
        Series::new("without ensemble", points(|r| r.ratio_without)),
        Series::new("with ensemble", points(|r| r.ratio_with)),
    ];
    let frame =
        Frame { title: "Self-oscillatory ratio vs. population", x_label: "population", y_label: "ratio", stamp };
    Ok(vec![Artifact::new("injection.csv", csv), Artifact::new("injection.svg", line_chart(&frame, &series))])
}

fn build_target(c: &ReproduceConfig) -> Result<TargetSignal> {
    let t = &c.target;
    let target = match t.kind {
        TargetKind::Sine => gen_sinusoid(c.tau, t.dt, SineMode::PureSine, t.freq)?,
        TargetKind::SineLiteral => gen_sinusoid(c.tau, t.dt, SineMode::LiteralOde, t.freq)?,
        TargetKind::Square => gen_square(c.tau, t.dt)?,
        TargetKind::Lorenz => gen_lorenz(c.tau, &t.lorenz())?,
    };
    Ok(if t.standardize { target.standardized() } else { target })
}

#[derive(Serialize)]
struct GroupSummary {
    sub_count: usize,
    trials: usize,
    non_oscillatory: usize,
    /// Over the mean-over-dimensions NRMSE of oscillatory trials.
    quartiles: Option<Quartiles>,
    per_dimension_median: Vec<Option<f64>>,
    outcomes: Vec<TrialOutcome>,
}

fn summarize(sub_count: usize, dims: usize, outcomes: Vec<TrialOutcome>) -> GroupSummary {
    let means: Vec<f64> = outcomes.iter().filter_map(TrialOutcome::mean_nrmse).collect();
    let per_dimension_median = (0..dims)
        .map(|d| {
            let v: Vec<f64> = outcomes.iter().filter_map(|o| o.train_nrmse.as_ref().map(|x| x[d])).collect();
            quartiles(&v).map(|q| q.median)
        })
        .collect();
    GroupSummary {
        sub_count,
        trials: outcomes.len(),
        non_oscillatory: outcomes.iter().filter(|o| !o.oscillatory).count(),
        quartiles: quartiles(&means),
        per_dimension_median,
        outcomes,
    }
}

fn reproduce(c: &ReproduceConfig, meta: &Metadata, stamp: Option<&str>) -> Result<Vec<Artifact>> {
    let target = build_target(c)?;
    let cfg = WaveformConfig {
        topology: c.topology.clone(),
        leak_mu: c.leak_mu,
        leak_sigma: c.leak_sigma,
        rho: c.rho,
        lambda: c.lambda,
        washout: c.washout,
        max_attempts: c.max_attempts,
    };
    let groups: Vec<GroupSummary> = if c.sub_counts.is_empty() {
        let outcomes = run_waveform_trials(&cfg, &target, c.trials, c.seed)?;
        vec![summarize(c.topology.sub_count, target.dims(), outcomes)]
    } else {
        subreservoir_count_sweep(c.topology.n, &c.sub_counts, &target, c.trials, &cfg, c.seed)?
            .into_iter()
            .map(|s| summarize(s.sub_count, target.dims(), s.outcomes))
            .collect()
    };

    let target_info = json!({
        "name": target.name,
        "dt": target.dt,
        "samples": target.len(),
        "dims": target.dims(),
    });
    let mut doc = serde_json::Map::new();
    doc.insert("target".into(), target_info);
    doc.insert("groups".into(), serde_json::to_value(&groups).expect("summaries serialize"));
    let nrmse_json = meta.json_document("result", &doc);

    let mut lines = Vec::new();
    let mut csv = meta.csv_header();
    csv.push_str("sub_count,trial,seed,oscillatory,attempt_count,nrmse_mean");
    for d in 0..target.dims() {
        csv.push_str(&format!(",nrmse_{d}"));
    }
    csv.push('\n');
    for g in &groups {
        for (k, o) in g.outcomes.iter().enumerate() {
            lines.push(json!({ "sub_count": g.sub_count, "trial": k, "outcome": o }));
            let nrmse: Vec<String> = match &o.train_nrmse {
                Some(v) => v.iter().map(|x| format_f64(*x)).collect(),
                None => vec![String::new(); target.dims()],
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                g.sub_count,
                k,
                o.seed,
                o.oscillatory,
                o.attempt_count,
                o.mean_nrmse().map(format_f64).unwrap_or_default(),
                nrmse.join(",")
            ));
        }
    }

    let mut out = vec![
        Artifact::new("nrmse.json", nrmse_json),
        Artifact::new("outcomes.jsonl", meta.json_lines(&lines)),
        Artifact::new("boxplot.csv", csv),
        Artifact::new("overlay.svg", overlay(c, &cfg, &groups, &target, stamp)?),
    ];
    if !c.sub_counts.is_empty() {
        let boxes: Vec<BoxGroup> = groups
            .iter()
            .filter_map(|g| {
                let q = g.quartiles?;
                let v: Vec<f64> = g.outcomes.iter().filter_map(TrialOutcome::mean_nrmse).collect();
                Some(BoxGroup {
                    label: format!("M = {}", g.sub_count),
                    quartiles: q,
                    min: v.iter().copied().fold(f64::INFINITY, f64::min),
                    max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                })
            })
            .collect();
        let title = format!("Train NRMSE by sub-reservoir count (N = {})", c.topology.n);
        let frame = Frame { title: &title, x_label: "sub-reservoirs", y_label: "NRMSE", stamp };
        out.push(Artifact::new("boxplot.svg", box_plot(&frame, &boxes)));
    }
    Ok(out)
}

/// Target against readout output for the first oscillatory trial of the
/// first group. Only the target is drawn when no trial oscillated.
fn overlay(
    c: &ReproduceConfig,
    cfg: &WaveformConfig,
    groups: &[GroupSummary],
    target: &TargetSignal,
    stamp: Option<&str>,
) -> Result<String> {
    let time = |k: usize| k as f64 * target.dt;
    let mut series: Vec<Series> = (0..target.dims())
        .map(|d| {
            let col = target.values.column(d);
            Series::new(format!("target {d}"), col.iter().enumerate().map(|(k, v)| (time(k), *v)).collect())
        })
        .collect();
    let first = groups.first().and_then(|g| g.outcomes.iter().position(|o| o.oscillatory).map(|k| (g.sub_count, k)));
    if let Some((sub_count, k)) = first {
        let topology = if c.sub_counts.is_empty() {
            cfg.topology.clone()
        } else {
            TopologySpec { kind: TopologyKind::WeaklyCoupled, sub_count, ..cfg.topology.clone() }
        };
        let fit =
            reproduce_waveform_detailed(&WaveformConfig { topology, ..cfg.clone() }, target, derive(c.seed, k as u64))?;
        if let (Some(traj), Some(model)) = (fit.trajectory, fit.model) {
            let y = predict(&model, &traj.to_matrix())?;
            for d in 0..target.dims() {
                let col = y.column(d);
                series.push(
                    Series::new(format!("output {d}"), col.iter().enumerate().map(|(k, v)| (time(k), *v)).collect())
                        .dashed(),
                );
            }
        }
    }
    let title = format!("Reproduction of {} target", target.name);
    let frame = Frame { title: &title, x_label: "time", y_label: "value", stamp };
    Ok(line_chart(&frame, &series))
}

fn demo(c: &DemoConfig, meta: &Metadata, stamp: Option<&str>) -> Result<Vec<Artifact>> {
    let runs = topology_demo(c.n, c.sub_count, c.rho, c.leak, c.tau, c.seed)?;
    let mut out = Vec::new();
    let mut series = Vec::new();
    for run in &runs {
        let name = kind_name(run.spec.kind);
        let mut csv = meta.csv_header().into_bytes();
        run.trajectory.write_csv(&mut csv)?;
        out.push(Artifact::new(format!("{name}_trajectory.csv"), String::from_utf8(csv).expect("CSV is UTF-8")));
        let payload = json!({ "topology": run.spec, "report": run.report });
        out.push(Artifact::new(format!("{name}_report.json"), meta.json_document("demo", &payload)));
        let unit = run.trajectory.unit(0);
        let start = unit.len().saturating_sub(200);
        series
            .push(Series::new(name, unit[start..].iter().enumerate().map(|(t, v)| ((start + t) as f64, *v)).collect()));
    }
    let frame = Frame { title: "Unit 0 under each topology", x_label: "time step", y_label: "state", stamp };
    out.push(Artifact::new("topology_demo.svg", line_chart(&frame, &series)));
    Ok(out)
}
