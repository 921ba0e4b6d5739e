mod common;

use std::path::PathBuf;

use zoneflow::sim::{
    audit, csv_columns, load_scenario, run, run_with, summary_text, sweep, tradeoff_is_monotone, tradeoff_table,
    AuditWindow, ControllerKind, ParamKey, RunArtifact, RunOptions, RunSummary, Scenario,
};
use zoneflow::thermal::steady_state_for_flows;

const CONSTANT: &str = r#"
name = "constant"
controller = "constant-flow"
plant = "full"
horizon_hours = 6.0
dt_seconds = 1.0
stride = 900
constant_flows = [0.08, 0.06]
initial_temps = [26.0, 18.0]

[context]
mode = "cooling"
supply_temp = 12.8
specific_heat = 1.012
cop = 2.9
fan_coeff = 2.0
fan_bound = 1.0
energy_weight = 1.0
total_flow_cap = 0.7

[zone_defaults]
capacitance = 20.0
resistance_out = 15.0
comfort_band = 1.5
flow_min = 0.01
flow_max = 0.5
weight = 0.1

[[zones]]
set_point = 22.0
[[zones]]
set_point = 22.0
resistance_out = 16.0

[[edges]]
between = [0, 1]
resistance = 18.0

[schedule]
breakpoints = [{ hour = 0.0, outdoor = 30.0, gains = [0.1, 0.2] }]
"#;

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("scenarios").join(name)
}

fn manifest(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

#[test]
fn constant_flow_run_settles_on_the_coupled_steady_state() {
    let sc = Scenario::from_toml(CONSTANT).unwrap();
    let art = run(&sc);
    assert!(!art.failed());
    let amb = sc.schedule.sample(0.0);
    let target = steady_state_for_flows(&sc.net, &sc.ctx, &amb, &[0.08, 0.06]).unwrap();
    let last = art.samples.last().unwrap();
    assert!(common::max_abs_diff(&last.temps, &target) < 1e-6, "{:?} vs {target:?}", last.temps);
    assert!((last.total_flow - 0.14).abs() < 1e-15);

    // The default window before the horizon end passes against the same
    // reference.
    let end = art.audits.last().unwrap();
    assert_eq!(end.verdict, Some(true), "{end:?}");
    assert!(end.steady_state.is_some());
}

#[test]
fn row_count_follows_horizon_and_stride() {
    let sc = Scenario::from_toml(CONSTANT).unwrap();
    let art = run(&sc);
    // 6 h at one row per 15 min, both ends included.
    assert_eq!(art.samples.len(), 6 * 4 + 1);
    assert_eq!(art.samples.first().unwrap().t_hours, 0.0);
    assert!((art.samples.last().unwrap().t_hours - 6.0).abs() < 1e-12);
}

#[test]
fn csv_has_schema_line_and_expected_columns() {
    let sc = Scenario::from_toml(CONSTANT).unwrap();
    let dir = scratch("csv_columns");
    let art = run_with(
        &sc,
        &RunOptions {
            out_dir: Some(dir.clone()),
            ..RunOptions::default()
        },
    )
    .unwrap();
    let path = art.csv_path.unwrap();
    assert_eq!(path, dir.join("constant.csv"));
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "# schema_version=1; scenario=constant; controller=constant-flow; zones=2"
    );
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["t_hours", "T_1", "T_2", "m_1", "m_2", "total_flow", "objective_full"]);
    assert_eq!(lines.count(), 25);

    let m1 = csv_columns(ControllerKind::Method1, 2);
    assert!(m1.contains(&"zeta_2".to_string()) && !m1.contains(&"price".to_string()));
    let m2 = csv_columns(ControllerKind::Method2, 2);
    assert!(m2.contains(&"price".to_string()) && !m2.contains(&"zeta_1".to_string()));
}

#[test]
fn events_take_effect_at_their_tick() {
    let art = run(&Scenario::bundled("scenario2").unwrap());
    let cap_at = |h: f64| art.samples.iter().find(|s| (s.t_hours - h).abs() < 1e-9).unwrap().cap;
    assert_eq!(cap_at(16.0 - 1.0 / 60.0), 0.5);
    assert_eq!(cap_at(16.0), 0.4);
    // The first window ending at the event is stationary; one straddling it
    // is not.
    let sc = Scenario::bundled("scenario2").unwrap();
    let straddle = audit(&sc, AuditWindow::new(15.95, 16.05)).unwrap();
    assert!(!straddle.stationary);
    assert_eq!(straddle.verdict, None);
}

#[test]
fn empty_trajectory_reports_no_data() {
    let art = RunArtifact {
        scenario: "empty".into(),
        controller: ControllerKind::Method1,
        csv_path: None,
        samples: Vec::new(),
        audits: Vec::new(),
        summary: RunSummary {
            zones: Vec::new(),
            energy_proxy: 0.0,
            saturation: Vec::new(),
        },
        failure: None,
    };
    assert!(summary_text(&art).contains("no data"));
    assert_eq!(art.mean_deviation(0.0, 1.0), None);
}

#[test]
fn community_of_detached_houses_audits_pass() {
    let sc = load_scenario(manifest("scenarios/community.toml")).unwrap();
    assert!(sc.net.is_detached());
    // House 3 heats with its own supply temperature.
    assert_eq!(sc.ctx.sign_of(sc.net.zone(2)), -1.0);
    let art = run(&sc);
    assert!(!art.failed());
    assert!(!art.summary.saturation.is_empty());
    assert!(art.audits.iter().all(|a| a.verdict == Some(true)), "{:#?}", art.audits);
}

#[test]
fn with_dt_keeps_the_row_period() {
    let sc = Scenario::bundled("scenario1").unwrap().with_dt(0.5).unwrap();
    assert_eq!(sc.dt, 0.5);
    assert_eq!(sc.stride, 120);
    assert_eq!(sc.derivative_tau, 0.5);
}

#[test]
fn weight_sweep_trades_comfort_for_power() {
    let mut sc = Scenario::from_toml(CONSTANT).unwrap();
    // Turn the fixture into a closed loop so the weight matters.
    sc.controller = ControllerKind::Method2;
    sc.constant_flows = None;
    sc.dt = 0.1;
    sc.derivative_tau = 0.1;
    sc.stride = 9000;
    sc.initial_temps = vec![22.0, 22.0];
    sc.validate().unwrap();
    let points = sweep(&sc, ParamKey::EnergyWeight, &[0.2, 1.0, 3.0], None).unwrap();
    assert_eq!(points.len(), 3);
    assert!(points.iter().all(|p| !p.artifact.failed()));
    assert_eq!(points[1].artifact.scenario, "constant_energy_weight=1");
    let rows = tradeoff_table(&sc, &points);
    assert!(tradeoff_is_monotone(&rows), "{rows:?}");
    assert!(rows[2].audited_deviation > rows[0].audited_deviation);
}
