use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::audit::{audit_windows, default_windows, AuditReport, AuditWindow, Snapshot, WindowAccum};
use super::scenario::{ControllerKind, Scenario};
use crate::control::{
    applied_flow, fan_step_m1, fan_step_m2, zone_step_m1, zone_step_m2, FanBroadcast, M1FanState, M1ZoneState,
    M2FanState, M2ZoneState,
};
use crate::error::{Error, Result};
use crate::problems::{objective_full, DecisionPoint, ProblemInstance};
use crate::thermal::{first_non_finite, rk4_step, AmbientSample, BuildingNetwork, OperatingContext, Rk4Scratch};

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Tolerance for "total flow at the cap".
pub const SATURATION_TOL: f64 = 1e-3;

/// One recorded row. Controller fields are empty (or zero) when the
/// controller does not have them.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t_hours: f64,
    pub temps: Vec<f64>,
    pub z: Vec<f64>,
    /// Commanded flows (the controller state). Applied flows are these
    /// clamped to `[0, flow_max]`.
    pub m: Vec<f64>,
    pub zeta: Vec<f64>,
    pub nu_up: Vec<f64>,
    pub nu_lo: Vec<f64>,
    pub mu_up: Vec<f64>,
    pub mu_lo: Vec<f64>,
    pub lambda: f64,
    /// Sum of applied flows, kg/s.
    pub total_flow: f64,
    pub objective_full: f64,
    pub price: f64,
    /// Cap and set points in force (not written to CSV).
    pub cap: f64,
    pub set_points: Vec<f64>,
    /// Unweighted coil plus fan power, kW (not written to CSV).
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSummary {
    pub max_deviation: f64,
    pub mean_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub zones: Vec<ZoneSummary>,
    /// Time-averaged unweighted power, kW.
    pub energy_proxy: f64,
    /// Intervals `(start_h, end_h)` where the total flow sits at the cap.
    pub saturation: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifact {
    pub scenario: String,
    pub controller: ControllerKind,
    pub csv_path: Option<PathBuf>,
    pub samples: Vec<Sample>,
    pub audits: Vec<AuditReport>,
    pub summary: RunSummary,
    /// Set when the run aborted; samples (and the CSV) are truncated.
    pub failure: Option<Error>,
}

impl RunArtifact {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// Rows with `h0 <= t < h1`.
    pub fn rows_in(&self, h0: f64, h1: f64) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.t_hours >= h0 - 1e-9 && s.t_hours < h1 - 1e-9)
    }

    /// Mean over rows in `[h0, h1)` and zones of `|T - T^set|`.
    pub fn mean_deviation(&self, h0: f64, h1: f64) -> Option<f64> {
        let (sum, count) = self.rows_in(h0, h1).fold((0.0, 0usize), |(s, c), r| {
            let d: f64 = r.temps.iter().zip(&r.set_points).map(|(t, sp)| (t - sp).abs()).sum();
            (s + d, c + r.temps.len())
        });
        (count > 0).then(|| sum / count as f64)
    }

    /// Largest `|T - T^set|` over rows in `[h0, h1)`.
    pub fn max_deviation(&self, h0: f64, h1: f64) -> Option<f64> {
        self.rows_in(h0, h1)
            .flat_map(|r| r.temps.iter().zip(&r.set_points).map(|(t, sp)| (t - sp).abs()))
            .reduce(f64::max)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(path, self.controller, &self.scenario, &self.samples)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Directory for `<scenario>.csv`; no file is written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Extra audit windows on top of the defaults.
    pub windows: Vec<AuditWindow>,
    /// Audit only the given windows.
    pub only_windows: bool,
}

enum Loop {
    M1 { zones: Vec<M1ZoneState>, fan: M1FanState },
    M2 { zones: Vec<M2ZoneState>, fan: M2FanState, bc: FanBroadcast },
    Constant(Vec<f64>),
}

impl Loop {
    fn new(sc: &Scenario, amb: &AmbientSample) -> Result<Self> {
        let t0 = &sc.initial_temps;
        // Warm start: the flow that would hold the initial temperature.
        let m0 = |i: usize| {
            let z = sc.net.zone(i);
            let ts = sc.ctx.supply_temp_for(z);
            let load = amb.outdoor / z.resistance_out + amb.gains[i] + sc.net.coupling_heat(i, t0);
            let f = (load - t0[i] / z.resistance_out) / (sc.ctx.specific_heat * (t0[i] - ts));
            if f.is_finite() {
                f.clamp(z.flow_min, z.flow_max)
            } else {
                z.flow_min
            }
        };
        let n = sc.net.len();
        Ok(match sc.controller {
            ControllerKind::Method1 => Loop::M1 {
                zones: (0..n)
                    .map(|i| M1ZoneState::new(t0[i], m0(i), sc.derivative_tau))
                    .collect::<Result<_>>()?,
                fan: M1FanState::default(),
            },
            ControllerKind::Method2 => Loop::M2 {
                zones: (0..n)
                    .map(|i| M2ZoneState::new(t0[i], m0(i), sc.derivative_tau))
                    .collect::<Result<_>>()?,
                fan: M2FanState::default(),
                bc: FanBroadcast::default(),
            },
            ControllerKind::ConstantFlow => Loop::Constant(sc.constant_flows.clone().unwrap_or_default()),
        })
    }

    fn commanded(&self) -> Vec<f64> {
        match self {
            Loop::M1 { zones, .. } => zones.iter().map(|s| s.m).collect(),
            Loop::M2 { zones, .. } => zones.iter().map(|s| s.m).collect(),
            Loop::Constant(f) => f.clone(),
        }
    }

    fn step(
        &mut self,
        sc: &Scenario,
        net: &BuildingNetwork,
        ctx: &OperatingContext,
        temps: &[f64],
    ) -> Result<()> {
        let dt = sc.dt;
        let g = &sc.gains;
        let tag = |i: usize| {
            move |e: Error| match e {
                Error::SupplyTemperature { temp, .. } => Error::SupplyTemperature { zone: i, temp },
                other => other,
            }
        };
        match self {
            Loop::M1 { zones, fan } => {
                let lambda = fan.lambda;
                for (i, st) in zones.iter_mut().enumerate() {
                    *st = zone_step_m1(net.zone(i), ctx, g, st, temps[i], lambda, dt).map_err(tag(i))?;
                }
                let total: f64 = zones
                    .iter()
                    .enumerate()
                    .map(|(i, s)| applied_flow(s.m, net.zone(i).flow_max))
                    .sum();
                *fan = fan_step_m1(g, fan, total, ctx.total_flow_cap, dt)?;
            }
            Loop::M2 { zones, fan, bc } => {
                let old = zones.clone();
                let mut reports = Vec::with_capacity(old.len());
                for (i, st) in zones.iter_mut().enumerate() {
                    let msgs: Vec<_> = net.neighbors(i).iter().map(|&(j, _)| old[j].message(j, temps[j])).collect();
                    let (next, rep) = zone_step_m2(i, net.zone(i), net.neighbors(i), ctx, g, &old[i], temps[i], &msgs, *bc, dt)?;
                    *st = next;
                    reports.push(rep);
                }
                let (f, b) = fan_step_m2(g, fan, &reports, ctx, dt)?;
                *fan = f;
                *bc = b;
            }
            Loop::Constant(_) => {}
        }
        Ok(())
    }

    fn snapshot(&self) -> Snapshot {
        let mut s = Snapshot {
            m: self.commanded(),
            ..Snapshot::default()
        };
        match self {
            Loop::M1 { zones, fan } => {
                s.z = zones.iter().map(|x| x.z).collect();
                s.zeta = zones.iter().map(|x| x.zeta).collect();
                s.nu_up = zones.iter().map(|x| x.nu_up).collect();
                s.nu_lo = zones.iter().map(|x| x.nu_lo).collect();
                s.mu_up = zones.iter().map(|x| x.mu_up).collect();
                s.mu_lo = zones.iter().map(|x| x.mu_lo).collect();
                s.lambda = fan.lambda;
            }
            Loop::M2 { zones, fan, bc } => {
                s.z = zones.iter().map(|x| x.z).collect();
                s.nu_up = zones.iter().map(|x| x.nu_up).collect();
                s.nu_lo = zones.iter().map(|x| x.nu_lo).collect();
                s.mu_up = zones.iter().map(|x| x.mu_up).collect();
                s.mu_lo = zones.iter().map(|x| x.mu_lo).collect();
                s.lambda = fan.lambda;
                s.price = bc.price;
            }
            Loop::Constant(_) => {}
        }
        s
    }
}

/// Unweighted coil plus fan power for the plant state, kW.
pub(crate) fn power(net: &BuildingNetwork, ctx: &OperatingContext, temps: &[f64], flows: &[f64]) -> f64 {
    let coil: f64 = net
        .zones()
        .iter()
        .enumerate()
        .map(|(i, z)| ctx.specific_heat * flows[i] * (temps[i] - ctx.supply_temp_for(z)).abs())
        .sum::<f64>()
        / ctx.cop;
    coil + ctx.fan_coeff * flows.iter().sum::<f64>().powi(3)
}

fn sample(
    t: f64,
    net: &BuildingNetwork,
    ctx: &OperatingContext,
    amb: &AmbientSample,
    temps: &[f64],
    ctl: &Loop,
) -> Sample {
    let snap = ctl.snapshot();
    let applied: Vec<f64> = snap.m.iter().zip(net.zones()).map(|(m, z)| applied_flow(*m, z.flow_max)).collect();
    let objective = ProblemInstance::new(net.clone(), ctx.clone(), amb.clone())
        .and_then(|inst| {
            objective_full(
                &inst,
                &DecisionPoint {
                    z: temps.to_vec(),
                    m: applied.clone(),
                },
            )
        })
        .unwrap_or(f64::NAN);
    Sample {
        t_hours: t / 3600.0,
        temps: temps.to_vec(),
        total_flow: applied.iter().sum(),
        objective_full: objective,
        cap: ctx.total_flow_cap,
        set_points: net.zones().iter().map(|z| z.set_point).collect(),
        power: power(net, ctx, temps, &applied),
        z: snap.z,
        m: snap.m,
        zeta: snap.zeta,
        nu_up: snap.nu_up,
        nu_lo: snap.nu_lo,
        mu_up: snap.mu_up,
        mu_lo: snap.mu_lo,
        lambda: snap.lambda,
        price: snap.price,
    }
}

/// Runs the closed loop with default audit windows and no CSV output.
pub fn run(sc: &Scenario) -> RunArtifact {
    run_with(sc, &RunOptions::default()).expect("no I/O without an output directory")
}

/// Runs the closed loop: per tick, measure the plant, step the controller
/// (zones first, then the fan), then integrate the plant over `dt` with the
/// applied flows held. Parameter events take effect at the first tick with
/// `t >= event time`.
///
/// Numerical failures do not return `Err`: they abort the run and are
/// reported in [`RunArtifact::failure`]. `Err` is reserved for invalid
/// windows and output I/O.
pub fn run_with(sc: &Scenario, opts: &RunOptions) -> Result<RunArtifact> {
    let mut windows = if opts.only_windows { Vec::new() } else { default_windows(sc) };
    for w in &opts.windows {
        w.check(sc)?;
        if !windows.contains(w) {
            windows.push(*w);
        }
    }
    let n = sc.net.len();
    let steps = sc.steps();
    let dt = sc.dt;
    let eps = 1e-9 * dt;
    let mut net = sc.net.clone();
    let mut ctx = sc.ctx.clone();
    let mut temps = sc.initial_temps.clone();
    let mut scratch = Rk4Scratch::new(n);
    let mut next_event = 0;
    let mut accums: Vec<WindowAccum> = windows.iter().map(|w| WindowAccum::new(*w, n)).collect();
    let mut samples = Vec::with_capacity(steps / sc.stride + 1);
    let mut failure = None;

    let mut ctl = match Loop::new(sc, &sc.schedule.sample(0.0)) {
        Ok(c) => c,
        Err(e) => {
            return finish(sc, opts, accums, samples, Some(e));
        }
    };

    for k in 0..=steps {
        let t = k as f64 * dt;
        while next_event < sc.events.len() && t >= sc.events[next_event].hour * 3600.0 - eps {
            let e = sc.events[next_event];
            if let Err(err) = e.key.apply(&mut net, &mut ctx, e.value) {
                failure = Some(err);
                break;
            }
            next_event += 1;
        }
        if failure.is_some() {
            break;
        }
        let amb = sc.schedule.sample(t);
        if k % sc.stride == 0 || k == steps {
            samples.push(sample(t, &net, &ctx, &amb, &temps, &ctl));
        }
        if k == steps {
            break;
        }
        if accums.iter().any(|a| a.contains(t, eps)) {
            let snap = ctl.snapshot();
            for acc in accums.iter_mut().filter(|a| a.contains(t, eps)) {
                acc.push(t, &temps, &snap, &net, &ctx);
            }
        }
        if let Err(e) = ctl.step(sc, &net, &ctx, &temps) {
            failure = Some(e);
            break;
        }
        let applied: Vec<f64> = ctl
            .commanded()
            .iter()
            .zip(net.zones())
            .map(|(m, z)| applied_flow(*m, z.flow_max))
            .collect();
        rk4_step(sc.plant, &net, &ctx, &mut temps, &applied, &amb, dt, &mut scratch);
        if let Some((zone, value)) = first_non_finite(&temps) {
            failure = Some(Error::NonFinite {
                time: t + dt,
                zone,
                value,
            });
            break;
        }
    }
    finish(sc, opts, accums, samples, failure)
}

fn finish(
    sc: &Scenario,
    opts: &RunOptions,
    accums: Vec<WindowAccum>,
    samples: Vec<Sample>,
    failure: Option<Error>,
) -> Result<RunArtifact> {
    let audits = audit_windows(sc, accums);
    let summary = summarize(&samples);
    let mut art = RunArtifact {
        scenario: sc.name.clone(),
        controller: sc.controller,
        csv_path: None,
        samples,
        audits,
        summary,
        failure,
    };
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", sc.name));
        art.write_csv(&path)?;
        art.csv_path = Some(path);
    }
    Ok(art)
}

fn summarize(samples: &[Sample]) -> RunSummary {
    let n = samples.first().map_or(0, |s| s.temps.len());
    let zones = (0..n)
        .map(|i| {
            let devs: Vec<f64> = samples.iter().map(|s| (s.temps[i] - s.set_points[i]).abs()).collect();
            ZoneSummary {
                max_deviation: devs.iter().copied().fold(0.0, f64::max),
                mean_deviation: devs.iter().sum::<f64>() / devs.len() as f64,
            }
        })
        .collect();
    let energy_proxy = if samples.is_empty() {
        0.0
    } else {
        samples.iter().map(|s| s.power).sum::<f64>() / samples.len() as f64
    };
    let mut saturation = Vec::new();
    let mut open: Option<f64> = None;
    for s in samples {
        let at_cap = (s.total_flow - s.cap).abs() <= SATURATION_TOL;
        match (at_cap, open) {
            (true, None) => open = Some(s.t_hours),
            (false, Some(start)) => {
                saturation.push((start, s.t_hours));
                open = None;
            }
            _ => {}
        }
    }
    if let (Some(start), Some(last)) = (open, samples.last()) {
        saturation.push((start, last.t_hours));
    }
    RunSummary {
        zones,
        energy_proxy,
        saturation,
    }
}

/// Column names for a controller and zone count.
pub fn csv_columns(controller: ControllerKind, n: usize) -> Vec<String> {
    let mut cols = vec!["t_hours".to_string()];
    let per_zone = |cols: &mut Vec<String>, name: &str| cols.extend((1..=n).map(|i| format!("{name}_{i}")));
    per_zone(&mut cols, "T");
    match controller {
        ControllerKind::ConstantFlow => per_zone(&mut cols, "m"),
        ControllerKind::Method1 | ControllerKind::Method2 => {
            per_zone(&mut cols, "Z");
            per_zone(&mut cols, "m");
            if controller == ControllerKind::Method1 {
                per_zone(&mut cols, "zeta");
            }
            for name in ["nu_up", "nu_lo", "mu_up", "mu_lo"] {
                per_zone(&mut cols, name);
            }
            cols.push("lambda".into());
        }
    }
    cols.push("total_flow".into());
    cols.push("objective_full".into());
    if controller == ControllerKind::Method2 {
        cols.push("price".into());
    }
    cols
}

fn row(controller: ControllerKind, s: &Sample) -> Vec<String> {
    let mut out = vec![s.t_hours.to_string()];
    let mut push = |v: &[f64]| out.extend(v.iter().map(f64::to_string));
    push(&s.temps);
    if controller != ControllerKind::ConstantFlow {
        push(&s.z);
    }
    push(&s.m);
    if controller == ControllerKind::Method1 {
        push(&s.zeta);
    }
    if controller != ControllerKind::ConstantFlow {
        push(&s.nu_up);
        push(&s.nu_lo);
        push(&s.mu_up);
        push(&s.mu_lo);
        push(&[s.lambda]);
    }
    push(&[s.total_flow, s.objective_full]);
    if controller == ControllerKind::Method2 {
        push(&[s.price]);
    }
    out
}

/// Writes the trajectory: a `# schema_version=...` comment line, the header
/// row, then one row per sample.
pub fn write_csv(path: &Path, controller: ControllerKind, scenario: &str, samples: &[Sample]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    let n = samples.first().map_or(0, |s| s.temps.len());
    writeln!(
        file,
        "# schema_version={CSV_SCHEMA_VERSION}; scenario={scenario}; controller={controller}; zones={n}"
    )?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(csv_columns(controller, n))?;
    for s in samples {
        w.write_record(row(controller, s))?;
    }
    w.flush()?;
    Ok(())
}
