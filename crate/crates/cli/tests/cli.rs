use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn zoeg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zoeg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, cfg: &Value) -> String {
    let p = dir.join("config.json");
    fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn both_schedules_exit_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &json!({
            "problem": "b1",
            "theorem1": 0.1,
            "solver": {"h1": 0.01, "h2": 0.01, "mu": 0.01, "iterations": 10},
        }),
    );
    let o = zoeg(tmp.path(), &["solve", "--config", &cfg, "--out", "run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn unknown_field_and_missing_schedule_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &json!({"problem": "b2", "bogus": 1}));
    assert_eq!(zoeg(tmp.path(), &["solve", "--config", &cfg]).status.code(), Some(2));
    let cfg = write_config(tmp.path(), &json!({"problem": "b2"}));
    assert_eq!(zoeg(tmp.path(), &["solve", "--config", &cfg]).status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn zero_iterations_give_one_row() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &json!({"problem": "b2", "solver": {"h1": 0.1, "h2": 0.1, "mu": 0.01, "iterations": 0}}),
    );
    let o = zoeg(tmp.path(), &["solve", "--config", &cfg, "--out", "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("run/trace.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "k,fL,gap_D,gap_R,gap_Dtau,queries,wall_ms");
    assert_eq!(text.lines().count(), 2);
    let s = read_json(&tmp.path().join("run/summary.json"));
    assert_eq!(s["queries"]["solver"], json!(2 * 2 * 2));
}

#[test]
fn b1_offline_schedule_centres_y() {
    let tmp = TempDir::new().unwrap();
    let o = zoeg(tmp.path(), &["solve", "--epsilon", "0.1", "--seed", "3", "--out", "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&tmp.path().join("run/summary.json"));
    let y = s["average"]["y"][0].as_f64().unwrap();
    assert!((y - 0.5).abs() <= 0.05, "average y {y}");
    assert_eq!(s["schema_version"], json!(1));
}

fn segment_config(tmp: &Path, rho: f64) -> String {
    write_config(
        tmp,
        &json!({
            "problem": "segmentation",
            "segmentation": {
                "source": {"fixture": {"dir": fixture("disk16")}},
                "params": {"lambda": 5.0, "rho": rho, "sigma_i": 20.0, "sigma_x": 1.0},
            },
        }),
    )
}

#[test]
fn segment_fixture_reaches_high_iou() {
    let tmp = TempDir::new().unwrap();
    let cfg = segment_config(tmp.path(), 8.0);
    let o = zoeg(tmp.path(), &["segment", "--config", &cfg, "--out", "seg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_json(&tmp.path().join("seg/metrics.json"));
    assert!(m["iou"].as_f64().unwrap() >= 0.95, "{m}");
    assert!(tmp.path().join("seg/mask.pgm").exists());

    let cfg = segment_config(tmp.path(), 0.0);
    let o = zoeg(tmp.path(), &["segment", "--config", &cfg, "--out", "seg0"]);
    assert!(o.status.success());
    let m0 = read_json(&tmp.path().join("seg0/metrics.json"));
    assert!(m0["iou"].as_f64().unwrap() <= m["iou"].as_f64().unwrap());
}

#[test]
fn pgm_without_truth_writes_mask_only() {
    let tmp = TempDir::new().unwrap();
    fs::copy(fixture("disk16").join("frame_0000.pgm"), tmp.path().join("img.pgm")).unwrap();
    let cfg = write_config(
        tmp.path(),
        &json!({
            "problem": "segmentation",
            "solver": {"h1": 0.003, "h2": 0.003, "mu": 1e-5, "samples": 2, "iterations": 20},
            "segmentation": {"source": {"pgm": {"path": "img.pgm", "seeds": [[119, 1], [0, 0]]}}},
        }),
    );
    let o = zoeg(tmp.path(), &["segment", "--config", &cfg, "--out", "seg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("seg/mask.pgm").exists());
    assert!(!tmp.path().join("seg/metrics.json").exists());
}

#[test]
fn segment_online_writes_every_frame() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &json!({
            "problem": "segmentation-online",
            "gaps": {"tracking": "off"},
            "online": {"source": {"fixture": {"dir": fixture("drift16")}}},
        }),
    );
    let o = zoeg(tmp.path(), &["segment-online", "--config", &cfg, "--out", "live"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_dir(tmp.path().join("live/masks")).unwrap().count(), 30);
    let rows = csv_rows(&tmp.path().join("live/online_metrics.csv"));
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r.len() == 8 && r[7] == "0"));
    let s = read_json(&tmp.path().join("live/summary.json"));
    assert!(s.get("achieved_fps").is_none_or(Value::is_null));
}

#[test]
fn sweep_rho_deduplicates_grid() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &json!({
            "problem": "segmentation",
            "solver": {"h1": 0.003, "h2": 0.003, "mu": 1e-5, "samples": 2, "iterations": 30},
            "segmentation": {"source": {"fixture": {"dir": fixture("disk16")}}},
        }),
    );
    let o = zoeg(tmp.path(), &["sweep-rho", "--config", &cfg, "--out", "sw", "--rho-grid", "0,2,4,6,8,8,0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&tmp.path().join("sw/rho_sweep.csv"));
    let rhos: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(rhos.len(), 5, "{rhos:?}");
}

#[test]
fn verify_stock_suites_pass() {
    let tmp = TempDir::new().unwrap();
    let o = zoeg(tmp.path(), &["verify"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    for suite in ["submodularity", "lovasz", "duality", "oracle"] {
        assert!(out.lines().any(|l| l.starts_with(suite) && l.contains("PASS")), "{out}");
    }
}

#[test]
fn verify_reports_supermodular_table() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("table.json"),
        json!({
            "name": "supermodular",
            "n": 2,
            "y_set": {"box": {"lower": [0.0], "upper": [1.0]}},
            "table": [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
        })
        .to_string(),
    )
    .unwrap();
    let cfg = write_config(tmp.path(), &json!({"problem": "custom-from-file", "custom_file": "table.json"}));
    let o = zoeg(tmp.path(), &["verify", "--config", &cfg, "--suite", "submodularity"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.contains("FAIL")).expect("failure line");
    let counter: Value = serde_json::from_str(&line[line.find('{').unwrap()..]).unwrap();
    assert!(counter["S"].is_array() && counter["T"].is_array(), "{counter}");
}

#[test]
fn verify_single_suite_and_unknown_suite() {
    let tmp = TempDir::new().unwrap();
    let o = zoeg(tmp.path(), &["verify", "--suite", "lovasz"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("lovasz") && !out.contains("oracle") && !out.contains("duality"));
    assert_eq!(zoeg(tmp.path(), &["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &json!({
            "problem": "b2",
            "seeds": [1, 2],
            "solver": {"h1": 0.05, "h2": 0.05, "mu": 0.01, "samples": 3, "iterations": 200},
        }),
    );
    let files = ["seed_1/trace.csv", "seed_1/summary.json", "seed_2/trace.csv", "seed_2/summary.json"];
    let mut runs = Vec::new();
    for _ in 0..2 {
        assert!(zoeg(tmp.path(), &["solve", "--config", &cfg, "--out", "run"]).status.success());
        runs.push(files.map(|f| fs::read(tmp.path().join("run").join(f)).unwrap()));
        fs::remove_dir_all(tmp.path().join("run")).unwrap();
    }
    for (i, f) in files.iter().enumerate() {
        assert!(runs[0][i] == runs[1][i], "{f} differs between runs");
    }
}
