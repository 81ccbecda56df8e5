use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_lanefree");

const SMALL: &str = r#"{
  "sim": {"horizon_steps": 200, "measure_window_steps": 50},
  "scenarios": [
    {"name": "tiny", "gamma_x": 0.9, "gamma_y": 1.0, "n_ng": 3, "n_rp": 6, "width_m": 10.2, "n_values": [20, 40]},
    {"name": "tiny-wide", "gamma_x": 0.9, "gamma_y": 1.0, "n_ng": 3, "n_rp": 6, "width_m": 11.9, "n_values": [30]}
  ]
}"#;

fn lanefree(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fd_writes_csvs_overlay_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cfg.json", SMALL);
    let out = tmp.path().join("out");
    let o = lanefree(&["fd", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("fd_tiny.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,density_veh_per_km,flow_veh_per_h,mean_speed_m_per_s,stationary"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("20,20,"));
    assert!(out.join("fd_tiny-wide.csv").exists());

    let svg = fs::read_to_string(out.join("fd.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fd");
    assert_eq!(manifest["audit"]["clean"], true);
    assert_eq!(manifest["audit"]["points"], 3);
    assert_eq!(manifest["config"]["sim"]["horizon_steps"], 200);
    assert!(manifest["config"]["strategy"]["c_x_ca"].is_number());
    assert!(manifest["started_at"].is_string());
}

#[test]
fn fd_reruns_are_byte_identical_and_seed_matters() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cfg.json", SMALL);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for dir in [&a, &b] {
        let o = lanefree(&["fd", "--config", s(&cfg), "--scenario", "tiny", "--out", s(dir)]);
        assert_eq!(o.status.code(), Some(0));
    }
    let o = lanefree(&["fd", "--config", s(&cfg), "--scenario", "tiny", "--out", s(&c), "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let read = |d: &Path| fs::read(d.join("fd_tiny.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(fs::read(a.join("fd.svg")).unwrap(), fs::read(b.join("fd.svg")).unwrap());
    assert_ne!(read(&a), read(&c));
    assert!(!a.join("fd_tiny-wide.csv").exists());
}

#[test]
fn configuration_and_usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let empty = write(tmp.path(), "empty.json", r#"{"scenarios": []}"#);
    assert_eq!(lanefree(&["fd", "--config", s(&empty), "--out", s(&out)]).status.code(), Some(1));

    let typo = write(tmp.path(), "typo.json", r#"{"strategy": {"c_x_caa": 4.5}}"#);
    let o = lanefree(&["fd", "--config", s(&typo), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("c_x_caa"));

    let cfg = write(tmp.path(), "cfg.json", SMALL);
    assert_eq!(lanefree(&["fd", "--config", s(&cfg), "--scenario", "nope", "--out", s(&out)]).status.code(), Some(1));
    assert_eq!(lanefree(&["fd", "--config", "/nonexistent.json", "--out", s(&out)]).status.code(), Some(1));
    assert_eq!(lanefree(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lanefree(&["run", "--out", s(&out)]).status.code(), Some(1));

    let crowded = write(
        tmp.path(),
        "crowded.json",
        r#"{"sim": {"horizon_steps": 10, "measure_window_steps": 5},
            "scenarios": [{"name": "jam", "gamma_x": 0, "gamma_y": 0, "n_ng": 0, "n_rp": 6, "width_m": 10.2, "n_values": [900]}]}"#,
    );
    assert_eq!(lanefree(&["fd", "--config", s(&crowded), "--out", s(&out)]).status.code(), Some(1));
}

#[test]
fn run_dumps_sampled_trajectories_that_audit_clean() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cfg.json", SMALL);
    let out = tmp.path().join("run");
    let o = lanefree(&["run", "--config", s(&cfg), "--scenario", "tiny", "--n", "30", "--out", s(&out), "--trajectories", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("flow="));

    let traj = fs::read_to_string(out.join("trajectories.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("step,t_s,id,x_m,y_m,vx_mps,vy_mps,fx_mps2,fy_mps2"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 30 * (200 / 10));
    assert!(rows[0].starts_with("0,0,"));
    assert!(rows.last().unwrap().starts_with("190,"));

    let o = lanefree(&["audit", s(&out.join("trajectories.csv")), "--config", s(&cfg), "--scenario", "tiny"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 violations"));
}

#[test]
fn run_without_trajectories_writes_no_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cfg.json", SMALL);
    let out = tmp.path().join("run");
    let o = lanefree(&["run", "--config", s(&cfg), "--n", "10", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!out.join("trajectories.csv").exists());
    assert!(out.join("manifest.json").exists());
}

const VEHICLES: &str = "id,class,length_m,width_m,v_d_mps\n3,1,3.2,1.6,30\n7,1,3.2,1.6,30\n";
const TRAJ_HEADER: &str = "step,t_s,id,x_m,y_m,vx_mps,vy_mps,fx_mps2,fy_mps2\n";

#[test]
fn audit_flags_overlaps_with_both_ids_and_the_step() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "vehicles.csv", VEHICLES);
    let trace = format!("{TRAJ_HEADER}0,0,3,10,2,20,0,0,0\n0,0,7,20,2,20,0,0,0\n5,1,3,10,2,20,0,0,0\n5,1,7,13,2.5,20,0,0,0\n");
    let t = write(tmp.path(), "trajectories.csv", &trace);
    let o = lanefree(&["audit", s(&t)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    let row = err.lines().find(|l| l.contains("collision")).expect("violation row");
    assert!(row.starts_with("5 "));
    assert!(row.contains("3,7"));
}

#[test]
fn audit_flags_lateral_speed_above_the_cap() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "vehicles.csv", VEHICLES);
    let trace = format!("{TRAJ_HEADER}4,0.8,3,10,5,10,3.5,0,0\n");
    let t = write(tmp.path(), "trajectories.csv", &trace);
    let o = lanefree(&["audit", s(&t)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lateral-speed"));
}

#[test]
fn audit_schema_mismatch_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "vehicles.csv", VEHICLES);
    let bad_header = write(tmp.path(), "a.csv", "step,t,id,x,y,vx,vy,fx,fy\n");
    assert_eq!(lanefree(&["audit", s(&bad_header)]).status.code(), Some(1));
    let bad_number = write(tmp.path(), "b.csv", &format!("{TRAJ_HEADER}0,0,3,ten,2,20,0,0,0\n"));
    assert_eq!(lanefree(&["audit", s(&bad_number)]).status.code(), Some(1));
    let unknown_id = write(tmp.path(), "c.csv", &format!("{TRAJ_HEADER}0,0,99,10,2,20,0,0,0\n"));
    assert_eq!(lanefree(&["audit", s(&unknown_id)]).status.code(), Some(1));
    let backwards = write(tmp.path(), "d.csv", &format!("{TRAJ_HEADER}5,1,3,10,2,20,0,0,0\n0,0,7,30,2,20,0,0,0\n"));
    assert_eq!(lanefree(&["audit", s(&backwards)]).status.code(), Some(1));
    let missing = tmp.path().join("nowhere").join("t.csv");
    assert_eq!(lanefree(&["audit", s(&missing)]).status.code(), Some(1));
}
