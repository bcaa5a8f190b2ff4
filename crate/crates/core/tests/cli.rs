use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use crn_uav::model::{objective_under, Scenario, TABLE2_JSON};
use crn_uav::report::{csv_reader, read_summary, read_trajectory, SCHEMA_LINE};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_crn-uav"));
    c.env_remove("CRN_UAV_OUT");
    c
}

fn small_json() -> String {
    let mut v: Value = serde_json::from_str(TABLE2_JSON).unwrap();
    v["horizon_s"] = 10.0.into();
    v["users_m"] = serde_json::json!([[162, 23], [332, 50], [112, 301]]);
    serde_json::to_string_pretty(&v).unwrap()
}

fn write_scenario(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut rd = csv_reader(path).unwrap();
    let i = rd.headers().unwrap().iter().position(|h| h == name).unwrap();
    rd.records().map(|r| r.unwrap()[i].parse().unwrap()).collect()
}

#[test]
fn run_writes_three_consistent_files() {
    let tmp = tempfile::tempdir().unwrap();
    let scen = write_scenario(tmp.path(), &small_json());
    let out = tmp.path().join("out");
    let o = run(&["run", "--scenario", scen.to_str().unwrap(), "--scheme", "proposed", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trajectory.csv", "convergence.csv"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(text.lines().next(), Some(SCHEMA_LINE), "{f}");
    }

    let obj = column(&out.join("convergence.csv"), "objective");
    assert!(!obj.is_empty());
    assert!(obj.windows(2).all(|w| w[1] >= w[0] - 1e-7), "{obj:?}");

    let json: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let keys: BTreeSet<&str> = json.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    for k in [
        "scheme",
        "avg_rate_bps_hz",
        "iterations",
        "converged",
        "hor_energy_avg_w",
        "ver_energy_avg_w",
        "final_interference_max_w",
    ] {
        assert!(keys.contains(k), "missing {k}");
    }
    let summary = read_summary(&out.join("summary.json")).unwrap();
    assert_eq!(summary.iterations, obj.len());
    assert!(summary.converged);
    assert!(summary.final_interference_max_w <= summary.meta.gamma_w * (1.0 + 1e-6));

    let sc = Scenario::load(&scen).unwrap();
    let rates = column(&out.join("trajectory.csv"), "rate_bps_hz");
    assert_eq!(rates.len(), sc.n_slots);
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    assert!((mean - summary.avg_rate_bps_hz).abs() <= 1e-9 * summary.avg_rate_bps_hz.max(1.0));

    let dv = read_trajectory(&out.join("trajectory.csv"), &sc).unwrap();
    let again = objective_under(&dv, &sc, crn_uav::channel::LosModel::Probabilistic).unwrap();
    assert!((again - summary.avg_rate_bps_hz).abs() <= 1e-6, "{again} vs {}", summary.avg_rate_bps_hz);
}

#[test]
fn huge_epsilon_records_one_iteration() {
    let tmp = tempfile::tempdir().unwrap();
    let scen = write_scenario(tmp.path(), &small_json());
    let out = tmp.path().join("o");
    let o = run(&[
        "run", "--scenario", scen.to_str().unwrap(), "--scheme", "2d-plos", "--out", out.to_str().unwrap(), "--epsilon", "1e9",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(column(&out.join("convergence.csv"), "objective").len(), 1);
}

#[test]
fn iteration_cap_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let scen = write_scenario(tmp.path(), &small_json());
    let out = tmp.path().join("o");
    let o = run(&[
        "run", "--scenario", scen.to_str().unwrap(), "--scheme", "proposed", "--out", out.to_str().unwrap(),
        "--epsilon", "1e-300", "--max-iters", "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!read_summary(&out.join("summary.json")).unwrap().converged);
}

#[test]
fn unknown_scheme_lists_the_valid_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let scen = write_scenario(tmp.path(), &small_json());
    let o = run(&["run", "--scenario", scen.to_str().unwrap(), "--scheme", "greedy", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    for s in ["proposed", "npc", "2d-los", "2d-plos"] {
        assert!(err.contains(s), "{err}");
    }
}

#[test]
fn malformed_scenario_points_at_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_json().replacen("\"slot_s\": 1,", "\"slot_s\": one,", 1);
    assert_ne!(text, small_json());
    let scen = write_scenario(tmp.path(), &text);
    let o = run(&["run", "--scenario", scen.to_str().unwrap(), "--scheme", "npc", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().position(|l| l.contains("one")).unwrap() + 1;
    assert!(err.contains(&format!("scenario.json:{line}:")), "{err}");
}

#[test]
fn unknown_key_is_malformed() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_json().replacen("{", "{\n  \"colour\": 3,", 1);
    let scen = write_scenario(tmp.path(), &text);
    let o = run(&["run", "--scenario", scen.to_str().unwrap(), "--scheme", "npc", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn budget_below_hover_is_infeasible() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v: Value = serde_json::from_str(&small_json()).unwrap();
    v["p_hor_ave_w"] = 100.0.into();
    let scen = write_scenario(tmp.path(), &v.to_string());
    let o = run(&["run", "--scenario", scen.to_str().unwrap(), "--scheme", "proposed", "--out", "x"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn output_directory_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .env("CRN_UAV_OUT", tmp.path())
        .args(["tradeoff-demo", "--altitudes", "30,100", "--user", "0,0", "--path=-200,0:200,0"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let p = tmp.path().join("tradeoff.csv");
    assert_eq!(column(&p, "p_los").len(), 162);
}

#[test]
fn tradeoff_demo_rejects_bad_input() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let bad_path = run(&["tradeoff-demo", "--altitudes", "30,100", "--user", "0,0", "--path", "0,0", "--out", out]);
    assert_eq!(bad_path.status.code(), Some(1));
    let one_plan = run(&["tradeoff-demo", "--altitudes", "30", "--user", "0,0", "--path=-1,0:1,0", "--out", out]);
    assert_eq!(one_plan.status.code(), Some(1));
}

#[test]
fn sweep_writes_rates_and_survives_bad_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let scen = write_scenario(tmp.path(), &small_json());
    let out = tmp.path().join("sw");
    let o = run(&[
        "sweep", "--scenario", scen.to_str().unwrap(), "--param", "T", "--values", "8,8.5,10",
        "--schemes", "2d-plos", "--out", out.to_str().unwrap(), "--workers", "2",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv_reader(&out.join("rates.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][2], "2d-plos");
    assert_eq!(&rows[1][4], "false");
    assert!(rows[1][5].contains("whole number"));
    assert!(rows[0][3].parse::<f64>().unwrap() > 0.0);
    assert!(out.join("T=10").join("2d-plos").join("summary.json").exists());
}

#[test]
fn sweep_with_no_values_is_malformed() {
    let tmp = tempfile::tempdir().unwrap();
    let scen = write_scenario(tmp.path(), &small_json());
    let o = run(&[
        "sweep", "--scenario", scen.to_str().unwrap(), "--param", "Gamma", "--values", "",
        "--out", tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
