use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::GainSet;
use crate::error::{Error, Result};
use crate::problems::{assumption1_check, assumption3_check, comfort_box_samples, strict_convexity_bound, ProblemInstance};
use crate::schedule::{Breakpoint, DisturbanceSchedule, Interpolation};
use crate::thermal::{AmbientSample, BuildingNetwork, Edge, OperatingContext, PlantModel, ZoneParams};

const SCENARIO1: &str = include_str!("../../scenarios/scenario1.toml");
const SCENARIO2: &str = include_str!("../../scenarios/scenario2.toml");

/// Names accepted by [`Scenario::bundled`].
pub const BUNDLED: [&str; 2] = ["scenario1", "scenario2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Method1,
    Method2,
    ConstantFlow,
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerKind::Method1 => "method1",
            ControllerKind::Method2 => "method2",
            ControllerKind::ConstantFlow => "constant-flow",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZoneField {
    Capacitance,
    ResistanceOut,
    SetPoint,
    ComfortMin,
    ComfortMax,
    FlowMin,
    FlowMax,
    Weight,
}

/// A parameter that can be changed mid-run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKey {
    EnergyWeight,
    TotalFlowCap,
    SupplyTemp,
    Zone(usize, ZoneField),
}

impl ParamKey {
    /// `energy_weight` (or `w`), `total_flow_cap` (or `m_bar`),
    /// `supply_temp`, or `zones.<i>.<field>`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Scenario(format!("unknown parameter key `{s}`"));
        Ok(match s {
            "energy_weight" | "w" => ParamKey::EnergyWeight,
            "total_flow_cap" | "m_bar" => ParamKey::TotalFlowCap,
            "supply_temp" => ParamKey::SupplyTemp,
            _ => {
                let mut parts = s.split('.');
                let (Some("zones"), Some(idx), Some(field), None) = (parts.next(), parts.next(), parts.next(), parts.next())
                else {
                    return Err(bad());
                };
                let idx: usize = idx.parse().map_err(|_| bad())?;
                let field = match field {
                    "capacitance" => ZoneField::Capacitance,
                    "resistance_out" => ZoneField::ResistanceOut,
                    "set_point" => ZoneField::SetPoint,
                    "comfort_min" => ZoneField::ComfortMin,
                    "comfort_max" => ZoneField::ComfortMax,
                    "flow_min" => ZoneField::FlowMin,
                    "flow_max" => ZoneField::FlowMax,
                    "weight" => ZoneField::Weight,
                    _ => return Err(bad()),
                };
                ParamKey::Zone(idx, field)
            }
        })
    }

    /// Writes `value` into the network or context and revalidates both.
    pub fn apply(self, net: &mut BuildingNetwork, ctx: &mut OperatingContext, value: f64) -> Result<()> {
        match self {
            ParamKey::EnergyWeight => ctx.energy_weight = value,
            ParamKey::TotalFlowCap => ctx.total_flow_cap = value,
            ParamKey::SupplyTemp => ctx.supply_temp = value,
            ParamKey::Zone(i, field) => {
                if i >= net.len() {
                    return Err(Error::Scenario(format!("event targets zone {i}, network has {}", net.len())));
                }
                let mut z = net.zone(i).clone();
                let slot = match field {
                    ZoneField::Capacitance => &mut z.capacitance,
                    ZoneField::ResistanceOut => &mut z.resistance_out,
                    ZoneField::SetPoint => &mut z.set_point,
                    ZoneField::ComfortMin => &mut z.comfort_min,
                    ZoneField::ComfortMax => &mut z.comfort_max,
                    ZoneField::FlowMin => &mut z.flow_min,
                    ZoneField::FlowMax => &mut z.flow_max,
                    ZoneField::Weight => &mut z.weight,
                };
                *slot = value;
                net.set_zone(i, z)?;
            }
        }
        ctx.validate(net)
    }
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamKey::EnergyWeight => f.write_str("energy_weight"),
            ParamKey::TotalFlowCap => f.write_str("total_flow_cap"),
            ParamKey::SupplyTemp => f.write_str("supply_temp"),
            ParamKey::Zone(i, field) => {
                let name = match field {
                    ZoneField::Capacitance => "capacitance",
                    ZoneField::ResistanceOut => "resistance_out",
                    ZoneField::SetPoint => "set_point",
                    ZoneField::ComfortMin => "comfort_min",
                    ZoneField::ComfortMax => "comfort_max",
                    ZoneField::FlowMin => "flow_min",
                    ZoneField::FlowMax => "flow_max",
                    ZoneField::Weight => "weight",
                };
                write!(f, "zones.{i}.{name}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterEvent {
    pub hour: f64,
    pub key: ParamKey,
    pub value: f64,
}

/// A validated closed-loop experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub net: BuildingNetwork,
    pub ctx: OperatingContext,
    pub schedule: DisturbanceSchedule,
    pub controller: ControllerKind,
    pub plant: PlantModel,
    pub gains: GainSet,
    pub horizon_hours: f64,
    pub dt: f64,
    /// Ticks between recorded rows.
    pub stride: usize,
    pub derivative_tau: f64,
    /// Defaults to the set points.
    pub initial_temps: Vec<f64>,
    /// Only for the constant-flow controller.
    pub constant_flows: Option<Vec<f64>>,
    pub events: Vec<ParameterEvent>,
}

// ---- file format ----

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    controller: ControllerKind,
    plant: PlantModel,
    horizon_hours: f64,
    #[serde(default = "default_dt")]
    dt_seconds: f64,
    #[serde(default = "default_stride")]
    stride: usize,
    /// Defaults to one step.
    derivative_tau_seconds: Option<f64>,
    initial_temps: Option<Vec<f64>>,
    constant_flows: Option<Vec<f64>>,
    context: OperatingContext,
    #[serde(default)]
    gains: GainSet,
    #[serde(default)]
    zone_defaults: ZoneEntry,
    zones: Vec<ZoneEntry>,
    #[serde(default)]
    edges: Vec<EdgeEntry>,
    schedule: ScheduleEntry,
    #[serde(default)]
    events: Vec<EventEntry>,
}

fn default_dt() -> f64 {
    0.1
}
fn default_stride() -> usize {
    600
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneEntry {
    set_point: Option<f64>,
    capacitance: Option<f64>,
    resistance_out: Option<f64>,
    /// Symmetric comfort band around the set point; explicit bounds win.
    comfort_band: Option<f64>,
    comfort_min: Option<f64>,
    comfort_max: Option<f64>,
    flow_min: Option<f64>,
    flow_max: Option<f64>,
    weight: Option<f64>,
    supply_temp: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeEntry {
    between: [usize; 2],
    resistance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleEntry {
    #[serde(default)]
    interpolation: Interpolation,
    breakpoints: Vec<BreakpointEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BreakpointEntry {
    hour: f64,
    outdoor: f64,
    gains: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventEntry {
    hour: f64,
    key: String,
    value: f64,
}

fn resolve_zone(i: usize, z: &ZoneEntry, d: &ZoneEntry) -> Result<ZoneParams> {
    let need = |v: Option<f64>, dv: Option<f64>, name: &str| {
        v.or(dv)
            .ok_or_else(|| Error::Scenario(format!("zones[{i}].{name} is missing (no zone_defaults either)")))
    };
    let set_point = z
        .set_point
        .ok_or_else(|| Error::Scenario(format!("zones[{i}].set_point is missing")))?;
    let band = z.comfort_band.or(d.comfort_band);
    let bound = |explicit: Option<f64>, default: Option<f64>, sign: f64, name: &str| {
        explicit
            .or_else(|| band.map(|b| set_point + sign * b))
            .or(default)
            .ok_or_else(|| Error::Scenario(format!("zones[{i}].{name} is missing and no comfort_band given")))
    };
    let zone = ZoneParams {
        capacitance: need(z.capacitance, d.capacitance, "capacitance")?,
        resistance_out: need(z.resistance_out, d.resistance_out, "resistance_out")?,
        set_point,
        comfort_min: bound(z.comfort_min, d.comfort_min, -1.0, "comfort_min")?,
        comfort_max: bound(z.comfort_max, d.comfort_max, 1.0, "comfort_max")?,
        flow_min: need(z.flow_min, d.flow_min, "flow_min")?,
        flow_max: need(z.flow_max, d.flow_max, "flow_max")?,
        weight: need(z.weight, d.weight, "weight")?,
        supply_temp_override: z.supply_temp.or(d.supply_temp),
    };
    zone.validate(i)?;
    Ok(zone)
}

impl Scenario {
    /// Parses and fully validates a scenario from TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        if file.zone_defaults.set_point.is_some() {
            return Err(Error::Scenario("zone_defaults.set_point is not allowed".into()));
        }
        let zones = file
            .zones
            .iter()
            .enumerate()
            .map(|(i, z)| resolve_zone(i, z, &file.zone_defaults))
            .collect::<Result<Vec<_>>>()?;
        let edges: Vec<Edge> = file
            .edges
            .iter()
            .map(|e| Edge {
                a: e.between[0],
                b: e.between[1],
                resistance: e.resistance,
            })
            .collect();
        let net = if edges.is_empty() && zones.len() > 1 {
            BuildingNetwork::detached(zones)?
        } else {
            BuildingNetwork::new(zones, edges)?
        };
        let schedule = DisturbanceSchedule::new(
            file.schedule
                .breakpoints
                .into_iter()
                .map(|b| Breakpoint {
                    hour: b.hour,
                    outdoor: b.outdoor,
                    gains: b.gains,
                })
                .collect(),
            file.schedule.interpolation,
        )?;
        let events = file
            .events
            .iter()
            .map(|e| {
                Ok(ParameterEvent {
                    hour: e.hour,
                    key: ParamKey::parse(&e.key)?,
                    value: e.value,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let initial_temps = file
            .initial_temps
            .unwrap_or_else(|| net.zones().iter().map(|z| z.set_point).collect());
        let sc = Scenario {
            name: file.name,
            net,
            ctx: file.context,
            schedule,
            controller: file.controller,
            plant: file.plant,
            gains: file.gains,
            horizon_hours: file.horizon_hours,
            dt: file.dt_seconds,
            stride: file.stride,
            derivative_tau: file.derivative_tau_seconds.unwrap_or(file.dt_seconds),
            initial_temps,
            constant_flows: file.constant_flows,
            events,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        match name {
            "scenario1" => Self::from_toml(SCENARIO1),
            "scenario2" => Self::from_toml(SCENARIO2),
            _ => Err(Error::Scenario(format!("no bundled scenario named `{name}`"))),
        }
    }

    /// Changes the tick, keeping the row period where it divides evenly and
    /// keeping a one-step derivative filter one step long.
    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        let row_period = self.stride as f64 * self.dt;
        if self.derivative_tau == self.dt {
            self.derivative_tau = dt;
        }
        self.dt = dt;
        self.stride = ((row_period / dt).round() as usize).max(1);
        if self.validate().is_err() {
            self.stride = 1;
        }
        self.validate()?;
        Ok(self)
    }

    /// Number of integration ticks over the horizon.
    pub fn steps(&self) -> usize {
        (self.horizon_hours * 3600.0 / self.dt).round() as usize
    }

    /// Network and context in force from each event onwards, starting with
    /// the initial ones at hour 0.
    pub fn parameter_states(&self) -> Result<Vec<(f64, BuildingNetwork, OperatingContext)>> {
        let mut net = self.net.clone();
        let mut ctx = self.ctx.clone();
        let mut out = vec![(0.0, net.clone(), ctx.clone())];
        for e in &self.events {
            e.key.apply(&mut net, &mut ctx, e.value)?;
            out.push((e.hour, net.clone(), ctx.clone()));
        }
        Ok(out)
    }

    /// Checks every invariant eagerly, including the assumptions the chosen
    /// controller relies on, for every parameter state and breakpoint.
    pub fn validate(&self) -> Result<()> {
        let n = self.net.len();
        if self.name.trim().is_empty() {
            return Err(Error::Scenario("name must not be empty".into()));
        }
        if !(self.horizon_hours > 0.0 && self.horizon_hours.is_finite()) {
            return Err(Error::Scenario(format!("horizon_hours must be > 0, got {}", self.horizon_hours)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Scenario(format!("dt_seconds must be > 0, got {}", self.dt)));
        }
        let steps = self.horizon_hours * 3600.0 / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return Err(Error::Scenario("horizon must be a whole number of dt steps".into()));
        }
        if self.stride == 0 || !self.steps().is_multiple_of(self.stride) {
            return Err(Error::Scenario(format!(
                "stride {} must be >= 1 and divide the {} steps of the horizon",
                self.stride,
                self.steps()
            )));
        }
        // A lagging load estimate destabilizes the loop; below one step the
        // filter itself is unstable.
        if !(self.derivative_tau >= self.dt && self.derivative_tau.is_finite()) {
            return Err(Error::Scenario(format!(
                "derivative_tau_seconds must be >= dt_seconds ({}), got {}",
                self.dt, self.derivative_tau
            )));
        }
        self.gains.validate()?;
        if self.schedule.zone_count() != n {
            return Err(Error::Scenario(format!(
                "schedule has {} gains per breakpoint, network has {n} zones",
                self.schedule.zone_count()
            )));
        }
        if self.initial_temps.len() != n || self.initial_temps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Scenario(format!("initial_temps must hold {n} finite values")));
        }
        let mut last = 0.0;
        for e in &self.events {
            if !(e.hour >= last && e.hour < self.horizon_hours) {
                return Err(Error::Scenario(format!(
                    "events must be time-sorted and inside the horizon (event `{}` at {} h)",
                    e.key, e.hour
                )));
            }
            last = e.hour;
        }
        match (self.controller, &self.constant_flows) {
            (ControllerKind::ConstantFlow, Some(f)) => {
                if f.len() != n {
                    return Err(Error::Scenario(format!("constant_flows must hold {n} values")));
                }
                for (i, (m, z)) in f.iter().zip(self.net.zones()).enumerate() {
                    if !(*m >= 0.0 && *m <= z.flow_max) {
                        return Err(Error::Scenario(format!("constant_flows[{i}] = {m} outside [0, {}]", z.flow_max)));
                    }
                }
            }
            (ControllerKind::ConstantFlow, None) => {
                return Err(Error::Scenario("constant-flow controller needs constant_flows".into()))
            }
            (_, Some(_)) => return Err(Error::Scenario("constant_flows is only used by constant-flow".into())),
            (_, None) => {}
        }

        for (hour, net, ctx) in self.parameter_states()? {
            ctx.validate(&net)?;
            for bp in self.schedule.breakpoints() {
                let amb = AmbientSample::new(bp.outdoor, bp.gains.clone())?;
                let inst = ProblemInstance::new(net.clone(), ctx.clone(), amb).map_err(|e| match e {
                    Error::Assumption { name, detail } => Error::Assumption {
                        name,
                        detail: format!("{detail} (parameters from {hour} h, breakpoint {} h)", bp.hour),
                    },
                    other => other,
                })?;
                self.check_controller_assumptions(&inst, hour, bp.hour)?;
            }
        }
        Ok(())
    }

    fn check_controller_assumptions(&self, inst: &ProblemInstance, hour: f64, bp: f64) -> Result<()> {
        let at = format!("parameters from {hour} h, breakpoint {bp} h");
        match self.controller {
            ControllerKind::Method1 => {
                let bound = strict_convexity_bound(inst.ctx());
                if let Some((i, z)) = inst.net().zones().iter().enumerate().find(|(_, z)| z.weight <= bound) {
                    return Err(Error::Assumption {
                        name: "strict-convexity",
                        detail: format!("zone {i}: weight {} <= w c_a²/(s φ η²) = {bound:.6} ({at})", z.weight),
                    });
                }
                if let Some(i) = assumption1_check(inst).iter().position(|ok| !ok) {
                    return Err(Error::Assumption {
                        name: "set-point-reachable",
                        detail: format!("zone {i}: set point cannot be held with a flow >= flow_min ({at})"),
                    });
                }
            }
            ControllerKind::Method2 => {
                let rep = assumption3_check(inst, &comfort_box_samples(inst, 7))?;
                if !rep.passes {
                    return Err(Error::Assumption {
                        name: "hessian-psd",
                        detail: format!("min eigenvalue {:.3e} at {:?} ({at})", rep.min_eigenvalue, rep.worst_sample),
                    });
                }
            }
            ControllerKind::ConstantFlow => {}
        }
        Ok(())
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Scenario::from_toml(&text).map_err(|e| match e {
        Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// A file path, or the name of a bundled scenario when no such file exists.
pub fn resolve_scenario(arg: &str) -> Result<Scenario> {
    if !Path::new(arg).exists() && BUNDLED.contains(&arg) {
        return Scenario::bundled(arg);
    }
    load_scenario(arg)
}
