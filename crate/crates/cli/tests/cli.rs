use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use degflow::moser::{build_schedule, MoserSchedule, ScheduleOptions};
use degflow_cli::{builtin, run_scenario, Scenario};

fn degflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degflow"))
        .args(args)
        .env("DEGFLOW_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CONSTANT: &str = r#"
name = "flat"
t_final = 0.05
cadence = 1

[model]
s = 1.0
kappa = 3.0
delta = 1.0
eps = 1e-3

[grid]
cells = [32]
lengths = [1.0]

[initial]
kind = "constant"
value = 0.4

[experiment]
kind = "single_run"
"#;

#[test]
fn constant_scenario_passes_with_flat_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(tmp.path(), "flat", CONSTANT);
    let out = degflow(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let mut rdr = csv::Reader::from_path(tmp.path().join("flat/records.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert!(rows.len() > 2);
    let first = |c: usize| rows[0][c].parse::<f64>().unwrap();
    for name in ["mass", "energy", "min_u", "max_u", "lyapunov"] {
        let c = col(name);
        for r in &rows {
            let v: f64 = r[c].parse().unwrap();
            assert!((v - first(c)).abs() <= 1e-12 * first(c).abs().max(1.0), "{name} moved: {v}");
        }
    }
    assert!((first(col("mass")) - 0.4).abs() <= 1e-15);
    for r in &rows {
        assert_eq!(r[col("dissipation")].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn artifacts_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(tmp.path(), "flat", CONSTANT);
    let out = degflow(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let dir = tmp.path().join("flat");
    for f in ["records.csv", "report.json", "manifest.json", "final_u.csv"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    assert!(!dir.join("schedule.json").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "single_run");
    assert_eq!(manifest["seed"], 0);
    // resolved config carries every default
    assert_eq!(manifest["scenario"]["stepper"]["newton_max"], 25);
    assert_eq!(manifest["scenario"]["model"]["a"], 1.0);
}

#[test]
fn bundled_manifests_name_their_anchor() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["moser_schedule_d3", "ipepa_identity", "constant_steady"] {
        let sc = builtin(name).unwrap().unwrap();
        run_scenario(&sc, name, tmp.path()).unwrap();
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(tmp.path().join(name).join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(m["anchor"], sc.anchor.as_str());
        assert!(!sc.anchor.is_empty());
    }
}

#[test]
fn incompatible_separation_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = builtin("separation_1d_canonical")
        .unwrap()
        .unwrap()
        .to_toml()
        .replace("kappa = 6.0", "kappa = 5.0");
    let cfg = write_scenario(tmp.path(), "sep", &text);
    let out = degflow(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("κ > 2s + 3"), "{msg}");
    assert!(msg.contains("kappa"), "{msg}");
}

#[test]
fn failed_assertion_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = builtin("separation_1d_canonical")
        .unwrap()
        .unwrap()
        .to_toml()
        .replace("required_lift = 10.0", "required_lift = 1000000.0");
    let cfg = write_scenario(tmp.path(), "sep", &text);
    let out = degflow(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("failed check: separation"), "{stdout}");

    let rep = degflow(&["report", tmp.path().to_str().unwrap()], tmp.path());
    assert_eq!(rep.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&rep.stdout).contains("FAIL  separation_1d_canonical"));
}

#[test]
fn moser_scenario_writes_the_schedule() {
    let tmp = tempfile::tempdir().unwrap();
    let out = degflow(&["run", "moser_schedule_d3"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(tmp.path().join("moser_schedule_d3/schedule.json")).unwrap();
    let got: MoserSchedule = serde_json::from_str(&text).unwrap();
    assert!(got.feasible);
    assert_eq!((got.d, got.s, got.kappa), (3, 0.0, 4.0));
    let oracle = build_schedule(3, 0.0, 4.0, None, 0.1, ScheduleOptions::default()).unwrap();
    assert_eq!(got, oracle);
    // phase 2 climbs toward 3(κ − s − 1) = 9 and hands over once above 3(s + 2) = 6
    let last_phase2 = got
        .exponents
        .iter()
        .filter(|e| e.phase == degflow::moser::Phase::Two)
        .last()
        .unwrap();
    assert!(last_phase2.nu > 6.0 && last_phase2.nu < 9.0);
}

#[test]
fn parse_errors_and_unknown_names_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(tmp.path(), "broken", "name = \"broken\"\n[model]\ns = \"one\"\n");
    assert_eq!(degflow(&["run", cfg.to_str().unwrap()], tmp.path()).status.code(), Some(2));
    assert_eq!(degflow(&["run", "no_such_scenario"], tmp.path()).status.code(), Some(2));
    let bad_grid = CONSTANT.replace("cells = [32]", "cells = [32, 32, 32]");
    let cfg = write_scenario(tmp.path(), "grid", &bad_grid);
    let out = degflow(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("grid"));
}

#[test]
fn output_root_comes_from_the_environment_or_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let env_root = tmp.path().join("env");
    let out = degflow(&["run", "constant_steady"], &env_root);
    assert_eq!(out.status.code(), Some(0));
    assert!(env_root.join("constant_steady/report.json").is_file());

    let flag_root = tmp.path().join("flag");
    let out = degflow(
        &["run", "constant_steady", "--out", flag_root.to_str().unwrap()],
        &env_root,
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(flag_root.join("constant_steady/report.json").is_file());
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn reruns_are_bit_identical() {
    let random = r#"
name = "noisy"
seed = 99
t_final = 1.0
cadence = 3
max_steps = 60
mollify = false

[model]
s = 1.0
kappa = 3.0
delta = 1.0
eps = 1e-3

[grid]
cells = [64]
lengths = [1.0]

[stepper]
dt_init = 1e-8

[initial]
kind = "random"
mean = 0.5
amplitude = 0.2

[experiment]
kind = "single_run"
"#;
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(tmp.path(), "noisy", random);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for root in [&a, &b] {
        let out = degflow(&["run", cfg.to_str().unwrap(), "eps_ladder_existence"], root);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for name in ["noisy", "eps_ladder_existence"] {
        let (x, y) = (csv_bytes(&a.join(name)), csv_bytes(&b.join(name)));
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }

    let other_seed = random.replace("seed = 99", "seed = 100");
    let cfg = write_scenario(tmp.path(), "noisy", &other_seed);
    let c = tmp.path().join("c");
    degflow(&["run", cfg.to_str().unwrap()], &c);
    assert_ne!(csv_bytes(&a.join("noisy")), csv_bytes(&c.join("noisy")));
}

#[test]
fn list_shows_the_catalog() {
    let tmp = tempfile::tempdir().unwrap();
    let out = degflow(&["list"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["separation_1d_canonical", "eps_ladder_existence", "ipepa_identity"] {
        assert!(text.contains(name), "{name}");
    }
    let show = degflow(&["list", "--show", "ipepa_identity"], tmp.path());
    let sc = Scenario::from_toml(&String::from_utf8_lossy(&show.stdout), "shown").unwrap();
    assert_eq!(sc.experiment.kind(), "elliptic_identity");
}

#[test]
fn file_initial_data_resolves_relative_to_the_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let mut data = String::from("x,value\n");
    for i in 0..32 {
        let x = (i as f64 + 0.5) / 32.0;
        data.push_str(&format!("{x},{}\n", 0.5 + 0.1 * (6.283185307179586 * x).cos()));
    }
    std::fs::write(tmp.path().join("u0.csv"), data).unwrap();
    let text = CONSTANT
        .replace("name = \"flat\"", "name = \"from_file\"")
        .replace("kind = \"constant\"\nvalue = 0.4", "kind = \"file\"\npath = \"u0.csv\"");
    let cfg = write_scenario(tmp.path(), "from_file", &text);
    let out = degflow(&["run", cfg.to_str().unwrap()], &tmp.path().join("runs"));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}
