//! Building thermal network: zones, walls between zones, and the lumped RC
//! zone-temperature dynamics.
//!
//! Units are fixed throughout the crate: kW, °C, kg/s, kJ and seconds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::DisturbanceSchedule;

/// HVAC operating mode. Determines the sign of `Z_i - T^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cooling,
    Heating,
}

impl Mode {
    /// +1 for cooling, -1 for heating.
    pub fn sign(self) -> f64 {
        match self {
            Mode::Cooling => 1.0,
            Mode::Heating => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneParams {
    /// kJ/°C
    pub capacitance: f64,
    /// Wall/window resistance to outside, °C/kW.
    pub resistance_out: f64,
    pub set_point: f64,
    pub comfort_min: f64,
    pub comfort_max: f64,
    /// kg/s
    pub flow_min: f64,
    pub flow_max: f64,
    /// Comfort weight, p.u.
    pub weight: f64,
    /// Per-zone supply air temperature (separately conditioned houses).
    pub supply_temp_override: Option<f64>,
}

impl ZoneParams {
    pub fn validate(&self, index: usize) -> Result<()> {
        let field = |name: &str| format!("zones[{index}].{name}");
        let all = [
            self.capacitance,
            self.resistance_out,
            self.set_point,
            self.comfort_min,
            self.comfort_max,
            self.flow_min,
            self.flow_max,
            self.weight,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::param(field("*"), "all zone parameters must be finite"));
        }
        if self.capacitance <= 0.0 {
            return Err(Error::param(field("capacitance"), "must be > 0"));
        }
        if self.resistance_out <= 0.0 {
            return Err(Error::param(field("resistance_out"), "must be > 0"));
        }
        if self.flow_min < 0.0 {
            return Err(Error::param(field("flow_min"), "must be >= 0"));
        }
        if self.flow_max <= self.flow_min {
            return Err(Error::param(field("flow_max"), "must exceed flow_min"));
        }
        if !(self.comfort_min < self.set_point && self.set_point < self.comfort_max) {
            return Err(Error::param(
                field("set_point"),
                format!(
                    "require comfort_min < set_point < comfort_max, got {} < {} < {}",
                    self.comfort_min, self.set_point, self.comfort_max
                ),
            ));
        }
        if self.weight < 0.0 {
            return Err(Error::param(field("weight"), "must be >= 0"));
        }
        if let Some(ts) = self.supply_temp_override {
            if !ts.is_finite() {
                return Err(Error::param(field("supply_temp_override"), "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// °C/kW
    pub resistance: f64,
}

/// Zones joined by interior walls.
///
/// A building network must be connected. A detached network (no walls at all)
/// models a community of separate houses, each with its own HVAC unit.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingNetwork {
    zones: Vec<ZoneParams>,
    edges: Vec<Edge>,
    neighbors: Vec<Vec<(usize, f64)>>,
    detached: bool,
}

impl BuildingNetwork {
    pub fn new(zones: Vec<ZoneParams>, edges: Vec<Edge>) -> Result<Self> {
        let mut net = Self::build(zones, edges, false)?;
        if !net.is_connected() {
            return Err(Error::InvalidNetwork("graph is not connected".into()));
        }
        net.detached = false;
        Ok(net)
    }

    /// Separate houses: no thermal coupling between units.
    pub fn detached(zones: Vec<ZoneParams>) -> Result<Self> {
        Self::build(zones, Vec::new(), true)
    }

    fn build(zones: Vec<ZoneParams>, mut edges: Vec<Edge>, detached: bool) -> Result<Self> {
        if zones.is_empty() {
            return Err(Error::InvalidNetwork("at least one zone is required".into()));
        }
        for (i, z) in zones.iter().enumerate() {
            z.validate(i)?;
        }
        let n = zones.len();
        let mut neighbors = vec![Vec::new(); n];
        for e in edges.iter_mut() {
            if e.a == e.b {
                return Err(Error::InvalidNetwork(format!("self-loop on zone {}", e.a)));
            }
            if e.a >= n || e.b >= n {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({}, {}) references a missing zone",
                    e.a, e.b
                )));
            }
            if !(e.resistance > 0.0 && e.resistance.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({}, {}) resistance must be finite and > 0",
                    e.a, e.b
                )));
            }
            if e.a > e.b {
                std::mem::swap(&mut e.a, &mut e.b);
            }
            if neighbors[e.a].iter().any(|&(j, _)| j == e.b) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate edge ({}, {})",
                    e.a, e.b
                )));
            }
            neighbors[e.a].push((e.b, e.resistance));
            neighbors[e.b].push((e.a, e.resistance));
        }
        for list in neighbors.iter_mut() {
            list.sort_by_key(|&(j, _)| j);
        }
        Ok(Self {
            zones,
            edges,
            neighbors,
            detached,
        })
    }

    fn is_connected(&self) -> bool {
        let n = self.zones.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &(j, _) in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn zones(&self) -> &[ZoneParams] {
        &self.zones
    }

    pub fn zone(&self, i: usize) -> &ZoneParams {
        &self.zones[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(j, R_ij)` pairs sorted by `j`.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn is_detached(&self) -> bool {
        self.detached
    }

    pub fn set_zone(&mut self, i: usize, zone: ZoneParams) -> Result<()> {
        zone.validate(i)?;
        self.zones[i] = zone;
        Ok(())
    }

    /// `sum_j (T_j - T_i) / R_ij`, heat flowing into zone `i` from its neighbors.
    pub fn coupling_heat(&self, i: usize, temps: &[f64]) -> f64 {
        self.neighbors[i]
            .iter()
            .map(|&(j, r)| (temps[j] - temps[i]) / r)
            .sum()
    }

    /// `sum_j 1 / R_ij`
    pub fn coupling_conductance(&self, i: usize) -> f64 {
        self.neighbors[i].iter().map(|&(_, r)| 1.0 / r).sum()
    }
}

/// Building-wide constants of the AHU and the comfort/energy tradeoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingContext {
    pub mode: Mode,
    /// Supply air temperature `T^s`, °C.
    pub supply_temp: f64,
    /// Specific heat of air `c_a`, kJ/kg/°C.
    pub specific_heat: f64,
    /// Coil coefficient of performance `η`.
    pub cop: f64,
    /// Fan power coefficient `s`, kW/(kg/s)^3.
    pub fan_coeff: f64,
    /// Fan bound `φ` used by the separable fan surrogate, kg/s.
    pub fan_bound: f64,
    /// Energy weight `w`, p.u.
    pub energy_weight: f64,
    /// Total flow cap `m̄`, kg/s.
    pub total_flow_cap: f64,
}

impl OperatingContext {
    /// Checks the context against a network: positivity, `φ >= m̄`,
    /// `m̄ < Σ m_max` and the mode/comfort ordering for every zone.
    pub fn validate(&self, net: &BuildingNetwork) -> Result<()> {
        let vals = [
            self.supply_temp,
            self.specific_heat,
            self.cop,
            self.fan_coeff,
            self.fan_bound,
            self.energy_weight,
            self.total_flow_cap,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("context", "all values must be finite"));
        }
        if self.specific_heat <= 0.0 {
            return Err(Error::param("context.specific_heat", "must be > 0"));
        }
        if self.cop <= 0.0 {
            return Err(Error::param("context.cop", "must be > 0"));
        }
        if self.fan_coeff < 0.0 {
            return Err(Error::param("context.fan_coeff", "must be >= 0"));
        }
        if self.energy_weight < 0.0 {
            return Err(Error::param("context.energy_weight", "must be >= 0"));
        }
        if self.total_flow_cap <= 0.0 {
            return Err(Error::param("context.total_flow_cap", "must be > 0"));
        }
        if self.fan_bound < self.total_flow_cap {
            return Err(Error::param(
                "context.fan_bound",
                format!(
                    "fan bound {} must be >= total flow cap {}",
                    self.fan_bound, self.total_flow_cap
                ),
            ));
        }
        let max_sum: f64 = net.zones().iter().map(|z| z.flow_max).sum();
        if self.total_flow_cap >= max_sum {
            return Err(Error::param(
                "context.total_flow_cap",
                format!("cap {} must be below the sum of zone maxima {max_sum}", self.total_flow_cap),
            ));
        }
        for i in 0..net.len() {
            self.zone_sign(net.zone(i), i)?;
        }
        Ok(())
    }

    pub fn supply_temp_for(&self, zone: &ZoneParams) -> f64 {
        zone.supply_temp_override.unwrap_or(self.supply_temp)
    }

    /// Sign of `Z_i - T^s_i` for a zone: +1 when cooled, -1 when heated.
    ///
    /// Zones with their own supply temperature pick their mode from it.
    pub fn zone_sign(&self, zone: &ZoneParams, index: usize) -> Result<f64> {
        let ts = self.supply_temp_for(zone);
        let mode = match zone.supply_temp_override {
            None => self.mode,
            Some(_) if ts < zone.comfort_min => Mode::Cooling,
            Some(_) if ts > zone.comfort_max => Mode::Heating,
            Some(_) => {
                return Err(Error::param(
                    format!("zones[{index}].supply_temp_override"),
                    format!("supply temperature {ts} lies inside the comfort range"),
                ))
            }
        };
        match mode {
            Mode::Cooling if ts >= zone.comfort_min => Err(Error::param(
                format!("zones[{index}]"),
                format!("cooling requires supply temperature {ts} below comfort_min {}", zone.comfort_min),
            )),
            Mode::Heating if ts <= zone.comfort_max => Err(Error::param(
                format!("zones[{index}]"),
                format!("heating requires supply temperature {ts} above comfort_max {}", zone.comfort_max),
            )),
            _ => Ok(mode.sign()),
        }
    }

    /// Sign for an already validated zone.
    pub fn sign_of(&self, zone: &ZoneParams) -> f64 {
        if self.supply_temp_for(zone) < zone.set_point {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    pub temps: Vec<f64>,
    /// seconds
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbientSample {
    /// Outdoor temperature `T°`, °C.
    pub outdoor: f64,
    /// Exogenous heat gains `Q_i`, kW.
    pub gains: Vec<f64>,
}

impl AmbientSample {
    pub fn new(outdoor: f64, gains: Vec<f64>) -> Result<Self> {
        if !outdoor.is_finite() {
            return Err(Error::param("ambient.outdoor", "must be finite"));
        }
        if let Some((i, q)) = gains.iter().enumerate().find(|(_, q)| !(q.is_finite() && **q >= 0.0)) {
            return Err(Error::param(format!("ambient.gains[{i}]"), format!("must be finite and >= 0, got {q}")));
        }
        Ok(Self { outdoor, gains })
    }
}

/// Which plant equations to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantModel {
    /// With inter-zone heat transfer.
    Full,
    /// Inter-zone terms dropped.
    Approx,
}

fn check_len(name: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension {
            name,
            expected,
            actual,
        });
    }
    Ok(())
}

fn check_inputs(net: &BuildingNetwork, temps: &[f64], flows: &[f64], amb: &AmbientSample) -> Result<()> {
    let n = net.len();
    check_len("temps", n, temps.len())?;
    check_len("flows", n, flows.len())?;
    check_len("gains", n, amb.gains.len())?;
    for (i, (&m, z)) in flows.iter().zip(net.zones()).enumerate() {
        if !(m >= 0.0 && m <= z.flow_max) {
            return Err(Error::param(
                format!("flows[{i}]"),
                format!("{m} outside [0, {}]", z.flow_max),
            ));
        }
    }
    Ok(())
}

/// Writes `dT/dt` into `out` without validation. Used inside the integrator.
pub(crate) fn derivative_into(
    plant: PlantModel,
    net: &BuildingNetwork,
    ctx: &OperatingContext,
    temps: &[f64],
    flows: &[f64],
    amb: &AmbientSample,
    out: &mut [f64],
) {
    for (i, z) in net.zones().iter().enumerate() {
        let t = temps[i];
        let ts = ctx.supply_temp_for(z);
        let mut heat = (amb.outdoor - t) / z.resistance_out
            + ctx.specific_heat * flows[i] * (ts - t)
            + amb.gains[i];
        if plant == PlantModel::Full {
            heat += net.coupling_heat(i, temps);
        }
        out[i] = heat / z.capacitance;
    }
}

pub fn rhs(
    plant: PlantModel,
    net: &BuildingNetwork,
    ctx: &OperatingContext,
    state: &ThermalState,
    flows: &[f64],
    amb: &AmbientSample,
) -> Result<Vec<f64>> {
    check_inputs(net, &state.temps, flows, amb)?;
    let mut out = vec![0.0; net.len()];
    derivative_into(plant, net, ctx, &state.temps, flows, amb, &mut out);
    Ok(out)
}

/// Zone temperature derivatives of the coupled model, °C/s.
pub fn rhs_full(
    net: &BuildingNetwork,
    ctx: &OperatingContext,
    state: &ThermalState,
    flows: &[f64],
    amb: &AmbientSample,
) -> Result<Vec<f64>> {
    rhs(PlantModel::Full, net, ctx, state, flows, amb)
}

/// Zone temperature derivatives with inter-zone transfer ignored, °C/s.
pub fn rhs_approx(
    net: &BuildingNetwork,
    ctx: &OperatingContext,
    state: &ThermalState,
    flows: &[f64],
    amb: &AmbientSample,
) -> Result<Vec<f64>> {
    rhs(PlantModel::Approx, net, ctx, state, flows, amb)
}

/// One classical RK4 step with flows and disturbances held over the step.
#[allow(clippy::too_many_arguments)]
pub(crate) fn rk4_step(
    plant: PlantModel,
    net: &BuildingNetwork,
    ctx: &OperatingContext,
    temps: &mut [f64],
    flows: &[f64],
    amb: &AmbientSample,
    dt: f64,
    scratch: &mut Rk4Scratch,
) {
    let n = temps.len();
    let Rk4Scratch { k1, k2, k3, k4, tmp } = scratch;
    derivative_into(plant, net, ctx, temps, flows, amb, k1);
    for i in 0..n {
        tmp[i] = temps[i] + 0.5 * dt * k1[i];
    }
    derivative_into(plant, net, ctx, tmp, flows, amb, k2);
    for i in 0..n {
        tmp[i] = temps[i] + 0.5 * dt * k2[i];
    }
    derivative_into(plant, net, ctx, tmp, flows, amb, k3);
    for i in 0..n {
        tmp[i] = temps[i] + dt * k3[i];
    }
    derivative_into(plant, net, ctx, tmp, flows, amb, k4);
    for i in 0..n {
        temps[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

pub(crate) struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

pub(crate) fn first_non_finite(temps: &[f64]) -> Option<(usize, f64)> {
    temps.iter().copied().enumerate().find(|(_, v)| !v.is_finite())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSpec {
    /// Start and end time, seconds.
    pub t_span: (f64, f64),
    /// Step, seconds.
    pub dt: f64,
    /// Record every `stride` steps. The final state is always recorded.
    pub stride: usize,
}

/// Integrates the zone temperatures at a fixed step.
///
/// Disturbances are sampled from the schedule at the start of every step and
/// held (zero-order hold), as are the flows returned by `flow_source`. The
/// flow callback must return one flow per zone for every `t` in the span.
#[allow(clippy::too_many_arguments)]
pub fn integrate<F>(
    plant: PlantModel,
    net: &BuildingNetwork,
    ctx: &OperatingContext,
    schedule: &DisturbanceSchedule,
    mut flow_source: F,
    initial: &[f64],
    spec: IntegrationSpec,
) -> Result<Vec<ThermalState>>
where
    F: FnMut(f64) -> Vec<f64>,
{
    let (t0, t1) = spec.t_span;
    if !(spec.dt > 0.0 && spec.dt.is_finite()) {
        return Err(Error::param("dt", "must be finite and > 0"));
    }
    if !(t1 > t0) {
        return Err(Error::param("t_span", "end must be after start"));
    }
    if spec.stride == 0 {
        return Err(Error::param("stride", "must be >= 1"));
    }
    check_len("initial", net.len(), initial.len())?;

    let steps = ((t1 - t0) / spec.dt).round() as usize;
    let mut temps = initial.to_vec();
    let mut scratch = Rk4Scratch::new(net.len());
    let mut out = vec![ThermalState {
        temps: temps.clone(),
        time: t0,
    }];
    for k in 0..steps {
        let t = t0 + k as f64 * spec.dt;
        let amb = schedule.sample(t);
        let flows = flow_source(t);
        check_inputs(net, &temps, &flows, &amb)?;
        rk4_step(plant, net, ctx, &mut temps, &flows, &amb, spec.dt, &mut scratch);
        let t_next = t0 + (k + 1) as f64 * spec.dt;
        if let Some((zone, value)) = first_non_finite(&temps) {
            return Err(Error::NonFinite {
                time: t_next,
                zone,
                value,
            });
        }
        if (k + 1) % spec.stride == 0 || k + 1 == steps {
            out.push(ThermalState {
                temps: temps.clone(),
                time: t_next,
            });
        }
    }
    Ok(out)
}

/// `K T = b` form of the steady-state equations for given flows.
fn steady_system(net: &BuildingNetwork, ctx: &OperatingContext, amb: &AmbientSample, flows: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = net.len();
    let mut k = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for (i, z) in net.zones().iter().enumerate() {
        let ca_m = ctx.specific_heat * flows[i];
        k[(i, i)] = 1.0 / z.resistance_out + net.coupling_conductance(i) + ca_m;
        for &(j, r) in net.neighbors(i) {
            k[(i, j)] -= 1.0 / r;
        }
        b[i] = amb.outdoor / z.resistance_out + ca_m * ctx.supply_temp_for(z) + amb.gains[i];
    }
    (k, b)
}

/// Equilibrium zone temperatures of the coupled model for constant flows.
pub fn steady_state_for_flows(
    net: &BuildingNetwork,
    ctx: &OperatingContext,
    amb: &AmbientSample,
    flows: &[f64],
) -> Result<Vec<f64>> {
    check_len("flows", net.len(), flows.len())?;
    check_len("gains", net.len(), amb.gains.len())?;
    if let Some((i, m)) = flows.iter().enumerate().find(|(_, m)| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::param(format!("flows[{i}]"), format!("must be finite and >= 0, got {m}")));
    }
    let (k, b) = steady_system(net, ctx, amb, flows);
    let sol = k
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular("steady-state conductance matrix".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("steady-state solution is not finite".into()));
    }
    Ok(sol.iter().copied().collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurwitzReport {
    /// Largest real part among the eigenvalues of the state matrix, 1/s.
    pub abscissa: f64,
    pub stable: bool,
}

/// Spectral abscissa of the coupled model's state matrix for fixed flows.
pub fn hurwitz_check(net: &BuildingNetwork, ctx: &OperatingContext, flows: &[f64]) -> Result<HurwitzReport> {
    check_len("flows", net.len(), flows.len())?;
    let n = net.len();
    let mut a = DMatrix::zeros(n, n);
    for (i, z) in net.zones().iter().enumerate() {
        let c = z.capacitance;
        a[(i, i)] = -(1.0 / z.resistance_out + net.coupling_conductance(i) + ctx.specific_heat * flows[i]) / c;
        for &(j, r) in net.neighbors(i) {
            a[(i, j)] += 1.0 / (r * c);
        }
    }
    let abscissa = a
        .complex_eigenvalues()
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(HurwitzReport {
        abscissa,
        stable: abscissa < 0.0,
    })
}
