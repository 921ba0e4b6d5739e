use std::path::PathBuf;
use std::process::{Command, Output};

fn hvacsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvacsim")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn check_accepts_bundled_scenarios() {
    for name in ["scenario1", "scenario2"] {
        let o = hvacsim(&["check", name]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("valid"));
    }
    assert!(stdout(&hvacsim(&["check", "scenario2"])).contains("Hessian PSD true"));
}

#[test]
fn invalid_configuration_exits_2() {
    let dir = scratch("invalid");
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "name = \"bad\"\ncontroller = \"method1\"\n").unwrap();
    let o = hvacsim(&["simulate", bad.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    assert_eq!(hvacsim(&["check", "no-such-scenario"]).status.code(), Some(2));
    assert_eq!(hvacsim(&["audit", "scenario1", "--window", "20:30"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_into_the_env_directory() {
    let dir = scratch("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_hvacsim"))
        .args(["simulate", "scenario2", "--strict"])
        .env("HVACSIM_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.join("scenario2.csv")).unwrap();
    assert!(text.starts_with("# schema_version=1; scenario=scenario2; controller=method2; zones=4\n"));
    // Comment, header and one row per minute over 24 h.
    assert_eq!(text.lines().count(), 2 + 24 * 60 + 1);
    let out = stdout(&o);
    assert!(out.contains("total flow at the cap"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn audit_reports_pass_and_non_stationary_windows() {
    let o = hvacsim(&["audit", "scenario1", "--window", "10:12"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict: pass"));

    let o = hvacsim(&["audit", "scenario1", "--window", "11.9:12.1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("non-stationary"));
}

#[test]
fn sweep_prints_a_tradeoff_table() {
    let dir = scratch("sweep");
    let o = hvacsim(&[
        "sweep",
        "scenario2",
        "--param",
        "w",
        "--values",
        "0.5,2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("tradeoff monotone"));
    assert!(dir.join("scenario2_energy_weight=0.5.csv").exists());
    assert!(dir.join("scenario2_energy_weight=2.csv").exists());
}

#[test]
fn numerical_blow_up_exits_3_and_keeps_the_partial_trajectory() {
    // A one-minute tick is far too coarse for the controller gains.
    let dir = scratch("blow_up");
    let o = hvacsim(&["simulate", "scenario1", "--dt", "60", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("FAILED: non-finite state"));
    let rows = std::fs::read_to_string(dir.join("scenario1.csv")).unwrap().lines().count() - 2;
    assert!(rows > 0 && rows < 24 * 60 + 1);
}
