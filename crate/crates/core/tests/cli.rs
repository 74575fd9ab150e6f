use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn soesn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soesn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--deterministic")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn generate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["generate", "--n", "30", "--tau", "300", "--seed", "5"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(soesn(&args, &a).status.success());
    assert!(soesn(&args, &b).status.success());
    for name in ["trajectory.csv", "report.json", "traces.svg", "config.echo.json"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
    let csv = read(&a, "trajectory.csv");
    assert!(csv.contains("# seed: 5"));
    assert_eq!(data_rows(&csv).len(), 301);
    let report: Value = serde_json::from_str(&read(&a, "report.json")).unwrap();
    assert_eq!(report["metadata"]["command"], "generate");
}

#[test]
fn invalid_radius_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = soesn(&["generate", "--rho", "0"], &tmp.path().join("x"));
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn indivisible_block_size_is_rejected_with_a_hint() {
    let tmp = tempfile::tempdir().unwrap();
    let out = soesn(&["reproduce", "--n", "500", "--sub", "8"], &tmp.path().join("x"));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("496") && stderr.contains("504"), "{stderr}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(soesn(&["sweep", "--bogus"], tmp.path()).status.code(), Some(2));
}

#[test]
fn existing_outputs_need_force() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("g");
    let args = ["generate", "--n", "20", "--tau", "200"];
    assert!(soesn(&args, &dir).status.success());
    let refused = soesn(&args, &dir);
    assert_eq!(refused.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(soesn(&forced, &dir).status.success());
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let out = soesn(
        &[
            "sweep",
            "--leak-values",
            "0.2,0.5,0.9",
            "--rho-values",
            "0.5,1.5",
            "--trials",
            "2",
            "--n",
            "20",
            "--tau",
            "200",
        ],
        &dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "sweep.csv");
    assert!(csv.lines().any(|l| l == "leak,rho,ratio,trials"));
    assert_eq!(data_rows(&csv).len(), 6);
    assert!(dir.join("heatmap.svg").exists());
}

#[test]
fn inject_reports_both_arms() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("i");
    assert!(soesn(&["inject-experiment", "--populations", "4,12", "--trials", "5", "--tau", "300"], &dir)
        .status
        .success());
    let csv = read(&dir, "injection.csv");
    assert!(csv.lines().any(|l| l == "population,ratio_without,ratio_with,trials"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    for row in rows {
        let fields: Vec<f64> = row.split(',').map(|f| f.parse().unwrap()).collect();
        assert!((0.0..=1.0).contains(&fields[1]) && (0.0..=1.0).contains(&fields[2]));
    }
}

#[test]
fn reproduce_sine_writes_nrmse_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("r");
    let out =
        soesn(&["reproduce", "--target", "sine", "--n", "96", "--sub", "4", "--tau", "500", "--trials", "2"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&read(&dir, "nrmse.json")).unwrap();
    let group = &doc["result"]["groups"][0];
    assert_eq!(group["trials"], 2);
    assert_eq!(group["outcomes"].as_array().unwrap().len(), 2);
    assert!(dir.join("overlay.svg").exists());
    assert_eq!(read(&dir, "outcomes.jsonl").lines().count(), 3);
}

#[test]
fn lorenz_target_starts_at_the_standard_point() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("l");
    assert!(soesn(&["reproduce", "--target", "lorenz", "--n", "48", "--sub", "4", "--tau", "300"], &dir)
        .status
        .success());
    let echo: Value = serde_json::from_str(&read(&dir, "config.echo.json")).unwrap();
    assert_eq!(echo["config"]["target"]["x0"], serde_json::json!([0.0, 1.0, 1.05]));
    assert_eq!(echo["config"]["target"]["kind"], "lorenz");
}

#[test]
fn echo_rerun_matches_for_any_job_count() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let args = ["topology-demo", "--n", "40", "--sub", "4", "--tau", "300", "--seed", "11"];
    assert!(soesn(&args, &first).status.success());
    let echo = first.join("config.echo.json");
    for jobs in ["1", "2"] {
        let again = tmp.path().join(format!("jobs{jobs}"));
        let out = soesn(&["topology-demo", "--config", echo.to_str().unwrap(), "--jobs", jobs], &again);
        assert!(out.status.success());
        for entry in fs::read_dir(&first).unwrap() {
            let name = entry.unwrap().file_name().into_string().unwrap();
            assert_eq!(read(&first, &name), read(&again, &name), "{name}");
        }
    }
}

#[test]
fn config_for_another_command_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("g");
    assert!(soesn(&["generate", "--n", "20", "--tau", "200"], &first).status.success());
    let echo = first.join("config.echo.json");
    let out = soesn(&["sweep", "--config", echo.to_str().unwrap()], &tmp.path().join("s"));
    assert_eq!(out.status.code(), Some(2));
}
