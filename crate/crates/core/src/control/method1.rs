use super::{applied_flow, check_dt, dual_step, DirtyDerivative, GainSet};
use crate::error::{Error, Result};
use crate::thermal::{OperatingContext, ZoneParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M1ZoneState {
    pub z: f64,
    pub m: f64,
    pub zeta: f64,
    pub nu_up: f64,
    pub nu_lo: f64,
    pub mu_up: f64,
    pub mu_lo: f64,
    pub deriv: DirtyDerivative,
}

impl M1ZoneState {
    /// `Z = T(0)`, the given initial flow, all multipliers zero.
    pub fn new(t0: f64, m0: f64, tau: f64) -> Result<Self> {
        Ok(Self {
            z: t0,
            m: m0,
            zeta: 0.0,
            nu_up: 0.0,
            nu_lo: 0.0,
            mu_up: 0.0,
            mu_lo: 0.0,
            deriv: DirtyDerivative::new(tau, t0)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct M1FanState {
    pub lambda: f64,
}

/// Where the zone's exogenous load `T°/R + Q` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadSource {
    /// Reconstructed from the measured temperature, its filtered derivative
    /// and the applied flow.
    Measured,
    /// Supplied directly (for checks against the raw dynamics).
    Known { outdoor: f64, gain: f64 },
}

/// One Euler step of the decentralized zone controller using the measured
/// load.
pub fn zone_step_m1(
    zone: &ZoneParams,
    ctx: &OperatingContext,
    gains: &GainSet,
    state: &M1ZoneState,
    measured_t: f64,
    lambda: f64,
    dt: f64,
) -> Result<M1ZoneState> {
    zone_step_m1_with(zone, ctx, gains, state, measured_t, lambda, dt, LoadSource::Measured)
}

#[allow(clippy::too_many_arguments)]
pub fn zone_step_m1_with(
    zone: &ZoneParams,
    ctx: &OperatingContext,
    gains: &GainSet,
    state: &M1ZoneState,
    measured_t: f64,
    lambda: f64,
    dt: f64,
    load: LoadSource,
) -> Result<M1ZoneState> {
    check_dt(dt)?;
    let mut next = *state;
    let tdot = next.deriv.update(measured_t, dt);
    let ts = ctx.supply_temp_for(zone);
    let sigma = ctx.sign_of(zone);
    let ca = ctx.specific_heat;
    let w = ctx.energy_weight;
    let r = zone.resistance_out;
    let load = match load {
        LoadSource::Measured => {
            zone.capacitance * tdot + measured_t / r + ca * applied_flow(state.m, zone.flow_max) * (measured_t - ts)
        }
        LoadSource::Known { outdoor, gain } => outdoor / r + gain,
    };
    let (z, m) = (state.z, state.m);
    let d = z - ts;
    if d == 0.0 || !d.is_finite() {
        return Err(Error::SupplyTemperature { zone: 0, temp: z });
    }
    let flow_est = (load - z / r) / (ca * d);
    let slope_est = (ts / r - load) / (ca * d * d);
    let coil = sigma * w / ctx.cop * ca;

    let z_rate = gains.k_z
        * (zone.weight * (zone.set_point - z) - coil * m - state.nu_up + state.nu_lo - state.zeta * slope_est);
    let m_rate = gains.k_m
        * (-w * ctx.fan_coeff * ctx.fan_bound * m - coil * d + state.zeta - state.mu_up + state.mu_lo - lambda);
    next.z = z + dt * z_rate;
    next.m = m + dt * m_rate;
    next.zeta = dual_step(state.zeta, gains.k_zeta * (flow_est - m), dt)?;
    next.nu_up = dual_step(state.nu_up, gains.k_nu_up * (z - zone.comfort_max), dt)?;
    next.nu_lo = dual_step(state.nu_lo, gains.k_nu_lo * (zone.comfort_min - z), dt)?;
    next.mu_up = dual_step(state.mu_up, gains.k_mu_up * (m - zone.flow_max), dt)?;
    next.mu_lo = dual_step(state.mu_lo, gains.k_mu_lo * (zone.flow_min - m), dt)?;
    Ok(next)
}

/// Fan price update from the measured total flow.
pub fn fan_step_m1(
    gains: &GainSet,
    state: &M1FanState,
    measured_total_flow: f64,
    cap: f64,
    dt: f64,
) -> Result<M1FanState> {
    check_dt(dt)?;
    let rate = gains.k_lambda * (measured_total_flow - cap);
    Ok(M1FanState {
        lambda: dual_step(state.lambda, rate, dt)?,
    })
}
