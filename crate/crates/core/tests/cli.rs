use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_harvest-dde"))
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_config(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_scenario(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn base_model() -> Value {
    json!({
        "gamma": 1,
        "r": {"type": "constant", "value": 2},
        "eta": {"type": "constant", "value": 1},
        "lam": {"type": "rotational_pulse", "peak": 0.5, "H": 0.25, "t_start": 0.25, "cycle": 3, "open_offset": 0},
        "K": {"type": "constant", "value": 1},
        "theta": {"type": "constant", "value": 0.5},
        "period": 3
    })
}

fn initial() -> Value {
    json!({"phi": {"type": "constant", "value": 1}, "N0": 1})
}

#[test]
fn simulate_equilibrium_stays_at_capacity() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(
        "simulate",
        &scenario_path("equilibrium.json"),
        tmp.path(),
        &[],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&tmp.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "N"]);
    assert!(rows.len() > 100);
    for row in &rows {
        let n: f64 = row[1].parse().unwrap();
        assert!((n - 1.0).abs() <= 1e-9);
    }
    let report = read_json(&tmp.path().join("report.json"));
    assert_eq!(report["verification"]["passed"], json!(true));
}

#[test]
fn simulate_summer_harvest_stays_within_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(
        "simulate",
        &scenario_path("summer_harvest.json"),
        tmp.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&tmp.path().join("report.json"));
    let lower = report["bounds"]["lower"].as_f64().unwrap();
    let upper = report["bounds"]["upper"].as_f64().unwrap();
    let (_, rows) = read_csv(&tmp.path().join("trajectory.csv"));
    for row in &rows {
        let n: f64 = row[1].parse().unwrap();
        assert!(
            n >= lower - 1e-6 && n <= upper + 1e-6,
            "N = {n} outside [{lower}, {upper}]"
        );
    }
    assert_eq!(report["verification"]["passed"], json!(true));
}

#[test]
fn bounds_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(
        "bounds",
        &scenario_path("equilibrium.json"),
        tmp.path(),
        &["--grid-n", "256", "--quad-n", "16"],
    );
    assert_eq!(out.status.code(), Some(0));
    let b = read_json(&tmp.path().join("bounds.json"));
    assert!((b["lower"].as_f64().unwrap() - (-0.5f64).exp()).abs() < 1e-10);
    assert!((b["upper"].as_f64().unwrap() - 0.5f64.exp()).abs() < 1e-10);
    assert_eq!(b["quad_n"], json!(16));
}

#[test]
fn overharvest_exits_with_premise_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(
        "simulate",
        &scenario_path("overharvest.json"),
        tmp.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(3));
    let stderr: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(stderr["error"]["premise"], json!("b(t) ≥ b > 0"));
    let file = read_json(&tmp.path().join("error.json"));
    assert_eq!(file, stderr);
}

#[test]
fn unknown_field_is_a_config_error_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let mut model = base_model();
    model["r"]["vlaue"] = json!(2);
    let cfg = write_scenario(
        tmp.path(),
        "bad.json",
        &json!({"model": model, "initial": initial()}),
    );
    let out = run_config("bounds", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], json!("config_error"));
    assert!(
        err["error"]["field"]
            .as_str()
            .unwrap()
            .starts_with("model.r"),
        "{err}"
    );
}

#[test]
fn negative_delay_is_a_premise_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut model = base_model();
    model["theta"] = json!({"type": "constant", "value": -0.1});
    let cfg = write_scenario(
        tmp.path(),
        "lag.json",
        &json!({"model": model, "initial": initial()}),
    );
    let out = run_config("simulate", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["premise"], json!("θ(t) ≥ 0"));
}

#[test]
fn periodic_reports_non_convergence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(
        tmp.path(),
        "short.json",
        &json!({
            "model": {
                "gamma": 1,
                "r": {"type": "constant", "value": 2},
                "eta": {"type": "constant", "value": 1},
                "lam": {"type": "constant", "value": 0},
                "K": {"type": "constant", "value": 2},
                "theta": {"type": "constant", "value": 0.5},
                "period": 1
            },
            "initial": initial(),
            "periodic": {"max_iter": 2}
        }),
    );
    let out = run_config("periodic", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(5));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], json!("not_converged"));
    let diag = read_json(&tmp.path().join("periodic.json"));
    assert_eq!(diag["result"]["converged"], json!(false));

    // the same scenario converges with the default iteration budget
    let cfg = write_scenario(
        tmp.path(),
        "full.json",
        &json!({"model": read_json(&cfg)["model"], "initial": initial()}),
    );
    let out = run_config("periodic", &cfg, tmp.path(), &["--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(0));
    let diag = read_json(&tmp.path().join("periodic.json"));
    assert!(diag["result"]["residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn periodic_skips_without_margin_condition_unless_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let mut scenario = read_json(&scenario_path("periodic_cosine_k.json"));
    scenario["periodic"]["force"] = json!(false);
    let cfg = write_scenario(tmp.path(), "cos.json", &scenario);

    let out = run_config("periodic", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let diag = read_json(&tmp.path().join("periodic.json"));
    assert_eq!(diag["margins"]["condition"], json!("NEITHER"));
    assert_eq!(diag["skipped"], json!(true));

    let out = run_config("periodic", &cfg, tmp.path(), &["--force"]);
    assert_eq!(out.status.code(), Some(0));
    let diag = read_json(&tmp.path().join("periodic.json"));
    assert_eq!(diag["skipped"], json!(false));
    assert_eq!(diag["result"]["converged"], json!(true));
    assert!(tmp.path().join("periodic_trajectory.csv").exists());
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn sweep_upper_bound_grows_with_harvest_peak() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(
        "sweep",
        &scenario_path("harvest_sweep.json"),
        tmp.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&tmp.path().join("sweep.csv"));
    assert_eq!(
        header,
        [
            "cell",
            "model.lam.peak",
            "model.lam.H",
            "premises_ok",
            "failed_premise",
            "lower",
            "upper",
            "m",
            "M",
            "B",
            "condition"
        ]
    );
    assert_eq!(rows.len(), 15);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], i.to_string());
    }
    let (peak, window, upper, ok) = (
        column(&header, "model.lam.peak"),
        column(&header, "model.lam.H"),
        column(&header, "upper"),
        column(&header, "premises_ok"),
    );
    for h in [
        "1.2500000000000000e-1",
        "2.5000000000000000e-1",
        "5.0000000000000000e-1",
    ] {
        let uppers: Vec<f64> = rows
            .iter()
            .filter(|r| r[window] == h && r[ok] == "true")
            .map(|r| r[upper].parse().unwrap())
            .collect();
        assert_eq!(uppers.len(), 4);
        assert!(uppers.windows(2).all(|w| w[0] <= w[1]), "{uppers:?}");
    }
    let flagged: Vec<_> = rows.iter().filter(|r| r[ok] == "false").collect();
    assert_eq!(flagged.len(), 3);
    for r in flagged {
        assert_eq!(r[peak], "1.2500000000000000e0");
        assert_eq!(r[column(&header, "failed_premise")], "b(t) ≥ b > 0");
        assert_eq!(r[upper], "");
    }
}

#[test]
fn sweep_over_rotation_cycle() {
    let tmp = tempfile::tempdir().unwrap();
    // a delay longer than a year spans several seasons
    let mut model = base_model();
    model["theta"]["value"] = json!(1.5);
    let cfg = write_scenario(
        tmp.path(),
        "cycle.json",
        &json!({
            "model": model,
            "initial": initial(),
            "sweep": {"axes": [{"path": "model.lam.cycle", "values": [1, 3]}]}
        }),
    );
    let out = run_config("sweep", &cfg, tmp.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&tmp.path().join("sweep.csv"));
    assert_eq!(header[1], "model.lam.cycle");
    assert_eq!(rows.len(), 2);
    let lower = column(&header, "lower");
    let lo: Vec<f64> = rows.iter().map(|r| r[lower].parse().unwrap()).collect();
    // yearly pulses lower b(t) more often than pulses one year in three
    assert!(lo[0] > lo[1], "{lo:?}");
}

#[test]
fn single_cell_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(
        tmp.path(),
        "one.json",
        &json!({
            "model": base_model(),
            "initial": initial(),
            "sweep": {"axes": [{"path": "model.gamma", "values": [2]}]}
        }),
    );
    let out = run_config("sweep", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = read_csv(&tmp.path().join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], "true");
}

#[test]
fn sweep_rejects_unknown_axis_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(
        tmp.path(),
        "axis.json",
        &json!({
            "model": base_model(),
            "initial": initial(),
            "sweep": {"axes": [{"path": "model.lam.height", "values": [0.1]}]}
        }),
    );
    let out = run_config("sweep", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(
        err["error"]["message"]
            .as_str()
            .unwrap()
            .contains("model.lam.height")
            || err["error"]["field"] == json!("model.lam.height"),
        "{err}"
    );
}

#[test]
fn missing_config_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config("bounds", &tmp.path().join("absent.json"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_rejected() {
    let out = run(&["integrate"]);
    assert_eq!(out.status.code(), Some(2));
}
