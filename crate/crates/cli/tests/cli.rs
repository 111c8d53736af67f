mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::scenario_json;
use serde_json::Value;
use sirb_core::model::ModelParams;

fn base() -> ModelParams {
    ModelParams {
        b0: 2.0,
        k1: 10.0,
        beta1: 1.0,
        beta2: 2.0,
        k2: 1.0,
        g0: 3.0,
        k3: 6.0,
        d1: 1.0,
        d2: 0.5,
        d3: 0.4,
        d4: 1.0,
        sigma: 0.5,
        gamma: 0.5,
        xi: 0.3,
    }
}

fn sirb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sirb")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap()
}

fn tags(report: &Value) -> Vec<String> {
    let mut v: Vec<String> = report["trivial"]
        .as_array()
        .unwrap()
        .iter()
        .chain(report["endemic_states"].as_array().unwrap())
        .map(|z| z["tag"].as_str().unwrap().to_string())
        .collect();
    v.sort();
    v
}

#[test]
fn simulation_from_an_equilibrium_stays_flat() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = base();
    p.b0 = 0.5;
    p.g0 = 2.0;
    let text = scenario_json(&p, [0.1; 4], 2.0, 32)
        .replace(
            r#"{"kind": "constant", "value": [1.0, 1.0, 1.0, 1.0]}"#,
            r#"{"kind": "steady_perturbation", "state": "Z3", "epsilon": 0.0, "mode": 0}"#,
        )
        .replace(r#""t_end": 1.0"#, r#""t_end": 5.0"#);
    let config = write(dir.path(), "z3.json", &text);
    let out_dir = dir.path().join("out");
    let out = sirb(&["simulate", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    let meta = stdout_json(&out);
    assert_eq!(meta["status"], "ok");
    assert!(meta["violations"].as_array().unwrap().is_empty());

    let traj = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let header: Vec<&str> = traj.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "deviation").expect("deviation column");
    for line in traj.lines().skip(1) {
        let dev: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert!(dev <= 1e-12, "{line}");
    }
    assert!(out_dir.join("final_state.csv").exists());
    let written: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("meta.json")).unwrap()).unwrap();
    assert_eq!(written["status"], "ok");
}

#[test]
fn negative_rate_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = scenario_json(&base(), [0.1; 4], 2.0, 16);
    text = text.replace(r#""beta1":1.0"#, r#""beta1":-1.0"#);
    assert!(text.contains("-1.0"));
    let config = write(dir.path(), "bad.json", &text);
    let out = sirb(&["steady", "--config", &config]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta1"));
}

#[test]
fn oversized_fixed_step_fails_on_positivity() {
    let dir = tempfile::tempdir().unwrap();
    let text = scenario_json(&base(), [0.1; 4], 2.0, 16)
        .replace(r#"{"policy": "adaptive", "dt_max": 0.1}"#, r#"{"policy": "fixed", "dt": 5.0}"#)
        .replace(r#""t_end": 1.0"#, r#""t_end": 20.0"#);
    let config = write(dir.path(), "dt.json", &text);
    let out_dir = dir.path().join("out");
    let out = sirb(&["simulate", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("positivity"), "{err}");
}

#[test]
fn endemic_regime_lists_an_interior_state() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = base();
    p.beta2 = 1.0;
    let config = write(dir.path(), "s.json", &scenario_json(&p, [0.1; 4], 2.0, 16));
    let report = stdout_json(&sirb(&["steady", "--config", &config]));
    assert_eq!(report["endemic"]["exists"], true);
    assert!(tags(&report).iter().any(|t| t.starts_with("Z4")), "{:?}", tags(&report));
    for z in report["endemic_states"].as_array().unwrap() {
        assert!(z["residual"].as_f64().unwrap() < 1e-9);
    }
}

#[test]
fn damping_regime_lists_only_the_zero_state() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = base();
    p.d1 = 3.0;
    p.d4 = 4.0;
    let config = write(dir.path(), "s.json", &scenario_json(&p, [0.1; 4], 2.0, 16));
    let report = stdout_json(&sirb(&["steady", "--config", &config]));
    assert_eq!(tags(&report), vec!["Z1"]);

    let stability = stdout_json(&sirb(&["stability", "--config", &config, "--modes", "8"]));
    let reports = stability["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["overall"], "stable");
}

#[test]
fn malformed_config_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "broken.json", "{\"name\": \"x\", \"params\": {");
    let out_dir = dir.path().join("out");
    for args in [
        vec!["steady", "--config", &config],
        vec!["stability", "--config", &config],
        vec!["simulate", "--config", &config, "--out", out_dir.to_str().unwrap()],
    ] {
        let out = sirb(&args);
        assert_eq!(out.status.code(), Some(1));
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
    }
    assert!(!out_dir.exists());
}

#[test]
fn growth_regime_boundary_states_are_unstable() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = base();
    p.beta2 = 0.5;
    let config = write(dir.path(), "s.json", &scenario_json(&p, [0.1, 0.2, 0.3, 0.4], 2.0, 32));
    let out = stdout_json(&sirb(&["stability", "--config", &config, "--modes", "16"]));
    let lambdas = out["lambdas"].as_array().unwrap();
    assert_eq!(lambdas.len(), 16);
    assert_eq!(lambdas[0], 0.0);
    for r in out["reports"].as_array().unwrap() {
        let tag = r["state"]["tag"].as_str().unwrap();
        if ["Z1", "Z2", "Z3"].contains(&tag) {
            assert_eq!(r["overall"], "unstable", "{tag}");
        }
        assert_eq!(r["modes"].as_array().unwrap().len(), 16);
    }
}

#[test]
fn selected_states_are_analyzed_alone() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = base();
    p.beta2 = 1.0;
    let text = scenario_json(&p, [0.1; 4], 2.0, 16).replace(
        r#""run":"#,
        r#""analysis": {"modes": 4, "states": ["Z2", "Z4"]}, "run":"#,
    );
    let config = write(dir.path(), "s.json", &text);
    let out = stdout_json(&sirb(&["stability", "--config", &config]));
    let tags: Vec<&str> = out["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["state"]["tag"].as_str().unwrap())
        .collect();
    assert_eq!(tags.len(), 2);
    assert_eq!(tags[0], "Z2");
    assert!(tags[1].starts_with("Z4"));
    assert_eq!(out["lambdas"].as_array().unwrap().len(), 4);
}

fn sweep_spec(axes: &str, outputs: &str) -> String {
    format!(
        r#"{{"base": {}, "axes": {axes}, "outputs": {outputs}}}"#,
        scenario_json(&base(), [0.1; 4], 2.0, 16)
    )
}

fn sweep_csv(dir: &Path, name: &str, spec: &str, jobs: &str) -> String {
    let config = write(dir, &format!("{name}.json"), spec);
    let out_dir = dir.join(name);
    let out = sirb(&["sweep", "--config", &config, "--out", out_dir.to_str().unwrap(), "--jobs", jobs, "--modes", "6"]);
    let meta = stdout_json(&out);
    assert!(meta["points"].as_u64().unwrap() >= 1);
    fs::read_to_string(out_dir.join("sweep.csv")).unwrap()
}

fn column<'a>(csv: &'a str, name: &str) -> Vec<&'a str> {
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    csv.lines().skip(1).map(|l| l.split(',').nth(k).unwrap()).collect()
}

#[test]
fn beta2_sweep_flips_existence_once() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<String> = (1..=30).map(|k| format!("{:?}", 0.02 * k as f64)).collect();
    let axes = format!(r#"[{{"param": "beta2", "values": [{}]}}]"#, values.join(", "));
    let csv = sweep_csv(dir.path(), "b2", &sweep_spec(&axes, r#"["endemic_exists"]"#), "2");
    let col = column(&csv, "endemic_exists");
    assert_eq!(col.len(), 30);
    let flips = col.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 1, "{col:?}");
    assert_eq!(col[0], "false");
}

#[test]
fn sweep_without_axes_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = sweep_csv(dir.path(), "none", &sweep_spec("[]", "[]"), "1");
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().next().unwrap().ends_with(",error"));
}

#[test]
fn d1_sweep_flips_host_state_at_b0() {
    let dir = tempfile::tempdir().unwrap();
    let axes = r#"[{"param": "d1", "values": [0.5, 1.0, 1.999, 2.0, 2.001, 3.0]}]"#;
    let csv = sweep_csv(dir.path(), "d1", &sweep_spec(axes, r#"["Z2.exists", "Z2.overall"]"#), "3");
    assert_eq!(column(&csv, "Z2.exists"), vec!["true", "true", "true", "false", "false", "false"]);
    assert_eq!(column(&csv, "Z2.overall")[3], "");
}

#[test]
fn sweep_output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let axes = r#"[{"param": "b0", "values": [0.5, 1.5, 2.5, 3.5]}, {"param": "a4", "values": [0.01, 0.1, 1.0]}]"#;
    let spec = sweep_spec(axes, "[]");
    let serial = sweep_csv(dir.path(), "serial", &spec, "1");
    let parallel = sweep_csv(dir.path(), "parallel", &spec, "6");
    assert_eq!(serial, parallel);
    assert_eq!(serial, sweep_csv(dir.path(), "again", &spec, "6"));
    let b0 = column(&serial, "b0");
    assert_eq!(b0[2], b0[0]);
    assert_ne!(b0[3], b0[0]);
}

#[test]
fn failed_endemic_search_is_reported_in_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let axes = r#"[{"param": "beta2", "values": [1.0, 2.0]}]"#;
    let csv = sweep_csv(dir.path(), "bf", &sweep_spec(axes, r#"["endemic_count", "Z2.overall"]"#), "2");
    assert_eq!(column(&csv, "endemic_count"), vec!["1", ""]);
    assert_eq!(column(&csv, "Z2.overall"), vec!["unstable", "unstable"]);
    let errors = column(&csv, "error");
    assert_eq!(errors[0], "");
    assert!(errors[1].contains("bracket"), "{}", errors[1]);
}

#[test]
fn unknown_sweep_axis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.json", &sweep_spec(r#"[{"param": "beta9", "values": [1]}]"#, "[]"));
    let out = sirb(&["sweep", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta9"));
}

#[test]
fn bundled_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        if name.starts_with("sweep") {
            sirb_cli::sweep::SweepSpec::load(&path).unwrap();
        } else {
            sirb_cli::scenario::Scenario::load(&path).unwrap();
        }
        seen += 1;
    }
    assert!(seen >= 4);
}
