use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iso-landau"))
}

fn run(cmd: &str, config: &str, dir: &Path) -> i32 {
    let cfg = dir.join("run.ini");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let status = bin().args([cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status().unwrap();
    status.code().unwrap()
}

const SMALL: &str = "grid.n = 65\ngrid.r_max = 8\n";

#[test]
fn t_end_zero_writes_one_row() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run("simulate", &format!("{SMALL}time.t_end = 0\n"), d.path()), 0);
    let trace = fs::read_to_string(d.path().join("out/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
    assert!(trace.starts_with("t,mass,entropy,dEdt_fd,"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"], 1);
    assert!(d.path().join("out/config.resolved").exists());
}

#[test]
fn reference_run_reports_monotone_entropy() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run("simulate", "grid.n = 257\ntime.t_end = 0.5\noutput.every = 20\noutput.snapshots = 0.25\n", d.path()), 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["entropy_monotone"], true);
    assert_eq!(report["second_moment_increasing"], true);
    let snap: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/snapshots/snapshot_000.json")).unwrap()).unwrap();
    assert_eq!(snap["n"], 257);
    assert!((snap["t"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn blowup_fixture_exits_3_with_error_row() {
    let d = tempfile::tempdir().unwrap();
    let values = vec![1e300; 33];
    let snap = serde_json::json!({"version": 1, "n": 33, "r_max": 4.0, "t": 0.0, "values": values});
    let path = d.path().join("huge.json");
    fs::write(&path, snap.to_string()).unwrap();
    let cfg = format!("grid.n = 33\ngrid.r_max = 4\ninit.kind = file\ninit.path = {}\ninit.normalize = false\n", path.display());
    assert_eq!(run("simulate", &cfg, d.path()), 3);
    let trace = fs::read_to_string(d.path().join("out/trace.csv")).unwrap();
    assert!(trace.lines().last().unwrap().starts_with("#error,"), "{trace}");
}

#[test]
fn config_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run("simulate", "diag.gamma = 0.2\n", d.path()), 2);
    assert_eq!(run("simulate", "grid.bogus = 1\n", d.path()), 2);
}

#[test]
fn distance_with_mismatched_masses_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}distance.target = gaussian\ndistance.scale = 2\n");
    assert_eq!(run("distance", &cfg, d.path()), 2);
}

#[test]
fn zero_phi0_gives_constant_path() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}geodesic.amplitude = 0\ngeodesic.t_end = 0.1\ngeodesic.dt = 0.01\ngeodesic.every = 2\n");
    assert_eq!(run("geodesic", &cfg, d.path()), 0);
    let path: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("out/path.json")).unwrap()).unwrap();
    let samples = path["samples"].as_array().unwrap();
    assert!(samples.len() > 2);
    let first = &samples[0]["rho"];
    for s in samples {
        assert_eq!(&s["rho"], first);
    }
}

#[test]
fn identical_configs_give_identical_outputs() {
    let cfg = "grid.n = 129\ntime.t_end = 0.3\noutput.every = 5\n";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run("simulate", cfg, a.path()), 0);
    assert_eq!(run("simulate", cfg, b.path()), 0);
    for f in ["trace.csv", "report.json"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn thread_cap_must_be_positive() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("o");
    let st = bin().args(["simulate", "--out", out.to_str().unwrap()]).env("ISO_LANDAU_THREADS", "0").status().unwrap();
    assert_eq!(st.code(), Some(2));
}
