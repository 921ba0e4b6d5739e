use super::{applied_flow, check_dt, dual_step, low_pass_flow, DirtyDerivative, GainSet};
use crate::error::{Error, Result};
use crate::thermal::{OperatingContext, ZoneParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M2ZoneState {
    pub z: f64,
    pub nu_up: f64,
    pub nu_lo: f64,
    pub mu_up: f64,
    pub mu_lo: f64,
    /// Low-pass flow command.
    pub m: f64,
    pub deriv: DirtyDerivative,
}

impl M2ZoneState {
    pub fn new(t0: f64, m0: f64, tau: f64) -> Result<Self> {
        Ok(Self {
            z: t0,
            nu_up: 0.0,
            nu_lo: 0.0,
            mu_up: 0.0,
            mu_lo: 0.0,
            m: m0,
            deriv: DirtyDerivative::new(tau, t0)?,
        })
    }

    /// What this zone tells its neighbors.
    pub fn message(&self, from: usize, measured_t: f64) -> NeighborMsg {
        NeighborMsg {
            from,
            t: measured_t,
            z: self.z,
            mu_up: self.mu_up,
            mu_lo: self.mu_lo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborMsg {
    pub from: usize,
    pub t: f64,
    pub z: f64,
    pub mu_up: f64,
    pub mu_lo: f64,
}

/// Combined fan price `3 w s h² + λ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FanBroadcast {
    pub price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowReport {
    /// Flow command at the start of the step.
    pub m: f64,
    /// Its analytic rate of change.
    pub m_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct M2FanState {
    pub lambda: f64,
    pub h_est: f64,
}

/// One Euler step of the distributed zone controller. `neighbors` lists
/// `(index, R_ij)` of the zone's graph neighbors; `msgs` must hold exactly
/// one message from each.
#[allow(clippy::too_many_arguments)]
pub fn zone_step_m2(
    index: usize,
    zone: &ZoneParams,
    neighbors: &[(usize, f64)],
    ctx: &OperatingContext,
    gains: &GainSet,
    state: &M2ZoneState,
    measured_t: f64,
    msgs: &[NeighborMsg],
    broadcast: FanBroadcast,
    dt: f64,
) -> Result<(M2ZoneState, FlowReport)> {
    check_dt(dt)?;
    if let Some(stray) = msgs.iter().find(|m| !neighbors.iter().any(|&(j, _)| j == m.from)) {
        return Err(Error::Message {
            zone: index,
            detail: format!("message from zone {}, which is not a neighbor", stray.from),
        });
    }
    let mut paired = Vec::with_capacity(neighbors.len());
    for &(j, r) in neighbors {
        let msg = msgs.iter().find(|m| m.from == j).ok_or_else(|| Error::Message {
            zone: index,
            detail: format!("missing message from neighbor {j}"),
        })?;
        paired.push((msg, r));
    }

    let mut next = *state;
    let tdot = next.deriv.update(measured_t, dt);
    let ts = ctx.supply_temp_for(zone);
    let sigma = ctx.sign_of(zone);
    let ca = ctx.specific_heat;
    let w = ctx.energy_weight;
    let r = zone.resistance_out;
    let (t, z) = (measured_t, state.z);
    let d = z - ts;
    if d == 0.0 || !d.is_finite() {
        return Err(Error::SupplyTemperature { zone: index, temp: z });
    }
    if let Some((msg, _)) = paired.iter().find(|(m, _)| m.z == ts) {
        return Err(Error::SupplyTemperature {
            zone: msg.from,
            temp: msg.z,
        });
    }

    // Exogenous load T°/R + Q recovered from the local balance.
    let measured_coupling: f64 = paired.iter().map(|(m, rij)| (m.t - t) / rij).sum();
    let load = zone.capacitance * tdot + t / r - measured_coupling + ca * applied_flow(state.m, zone.flow_max) * (t - ts);
    let net_load = load - z / r + paired.iter().map(|(m, rij)| (m.z - z) / rij).sum::<f64>();
    let target = net_load / (ca * d);

    let supply_side = ts / r + paired.iter().map(|(m, rij)| (ts - m.z) / rij).sum::<f64>() - load;
    let dh = supply_side / (ca * d * d) + paired.iter().map(|(m, rij)| 1.0 / (rij * ca * (m.z - ts))).sum::<f64>();
    let conductance = 1.0 / r + neighbors.iter().map(|&(_, rij)| 1.0 / rij).sum::<f64>();
    let nbr_mu: f64 = paired.iter().map(|(m, rij)| (m.mu_up - m.mu_lo) / rij).sum();

    let grad = zone.weight * (z - zone.set_point) - sigma * w / (ctx.cop * r)
        + broadcast.price * dh
        + state.nu_up
        - state.nu_lo
        - sigma * state.mu_up * (conductance + zone.flow_max * ca)
        + sigma * state.mu_lo * (conductance + zone.flow_min * ca)
        + sigma * nbr_mu;
    next.z = z - dt * gains.k_z * grad;
    next.nu_up = dual_step(state.nu_up, gains.k_nu_up * (z - zone.comfort_max), dt)?;
    next.nu_lo = dual_step(state.nu_lo, gains.k_nu_lo * (zone.comfort_min - z), dt)?;
    next.mu_up = dual_step(state.mu_up, gains.k_mu_up * sigma * (net_load - zone.flow_max * ca * d), dt)?;
    next.mu_lo = dual_step(state.mu_lo, gains.k_mu_lo * sigma * (zone.flow_min * ca * d - net_load), dt)?;
    next.m = low_pass_flow(state.m, target, gains.k_m, dt);
    let report = FlowReport {
        m: state.m,
        m_dot: gains.k_m * (target - state.m),
    };
    Ok((next, report))
}

/// Fan update: reconstructs the total steady-state flow from the zones'
/// flow reports, steps `λ`, and returns the new broadcast price.
pub fn fan_step_m2(
    gains: &GainSet,
    state: &M2FanState,
    reports: &[FlowReport],
    ctx: &OperatingContext,
    dt: f64,
) -> Result<(M2FanState, FanBroadcast)> {
    check_dt(dt)?;
    let h_est = reports.iter().map(|r| r.m_dot).sum::<f64>() / gains.k_m + reports.iter().map(|r| r.m).sum::<f64>();
    let lambda = dual_step(state.lambda, gains.k_lambda * (h_est - ctx.total_flow_cap), dt)?;
    let price = 3.0 * ctx.energy_weight * ctx.fan_coeff * h_est * h_est + lambda;
    Ok((M2FanState { lambda, h_est }, FanBroadcast { price }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::solve_general;
    use crate::problems::{h_of_z, ProblemInstance};
    use crate::thermal::{AmbientSample, BuildingNetwork, Edge, Mode};

    fn zone(set_point: f64) -> ZoneParams {
        ZoneParams {
            capacitance: 20.0,
            resistance_out: 15.0,
            set_point,
            comfort_min: set_point - 1.5,
            comfort_max: set_point + 1.5,
            flow_min: 0.01,
            flow_max: 0.45,
            weight: 0.1,
            supply_temp_override: None,
        }
    }

    fn ctx(w: f64, cap: f64) -> OperatingContext {
        OperatingContext {
            mode: Mode::Cooling,
            supply_temp: 12.8,
            specific_heat: 1.012,
            cop: 2.9,
            fan_coeff: 2.0,
            fan_bound: 1.0,
            energy_weight: w,
            total_flow_cap: cap,
        }
    }

    fn ring() -> BuildingNetwork {
        let e = |a, b| Edge { a, b, resistance: 23.0 };
        BuildingNetwork::new(
            [20.0, 20.5, 21.0, 21.0].iter().map(|&s| zone(s)).collect(),
            vec![e(0, 1), e(1, 3), e(3, 2), e(2, 0)],
        )
        .unwrap()
    }

    fn msgs(states: &[M2ZoneState], temps: &[f64], net: &BuildingNetwork, i: usize) -> Vec<NeighborMsg> {
        net.neighbors(i).iter().map(|&(j, _)| states[j].message(j, temps[j])).collect()
    }

    #[test]
    fn oracle_optimum_is_a_fixed_point() {
        for (w, cap) in [(1.0, 0.5), (0.1, 0.42)] {
            let net = ring();
            let c = ctx(w, cap);
            let amb = AmbientSample::new(32.0, vec![0.30, 0.30, 0.28, 0.25]).unwrap();
            let inst = ProblemInstance::new(net.clone(), c.clone(), amb).unwrap();
            let opt = solve_general(&inst).unwrap();
            assert!(opt.converged);
            let states: Vec<M2ZoneState> = (0..4)
                .map(|i| M2ZoneState {
                    z: opt.pt.z[i],
                    nu_up: opt.duals.nu_up[i],
                    nu_lo: opt.duals.nu_lo[i],
                    mu_up: opt.duals.mu_up[i],
                    mu_lo: opt.duals.mu_lo[i],
                    m: opt.pt.m[i],
                    deriv: DirtyDerivative::new(10.0, opt.pt.z[i]).unwrap(),
                })
                .collect();
            let h = h_of_z(&inst, &opt.pt.z).unwrap();
            let g = GainSet::default();
            let bc = FanBroadcast {
                price: 3.0 * w * 2.0 * h * h + opt.duals.lambda,
            };
            let mut reports = Vec::new();
            for i in 0..4 {
                let m = msgs(&states, &opt.pt.z, &net, i);
                let (n, rep) = zone_step_m2(
                    i,
                    net.zone(i),
                    net.neighbors(i),
                    &c,
                    &g,
                    &states[i],
                    opt.pt.z[i],
                    &m,
                    bc,
                    0.1,
                )
                .unwrap();
                assert!((n.z - states[i].z).abs() < 1e-10, "w={w} zone {i}: {} vs {}", n.z, states[i].z);
                assert!((n.m - states[i].m).abs() < 1e-12);
                assert!((n.mu_up - states[i].mu_up).abs() < 1e-10);
                assert!(rep.m_dot.abs() < 1e-12);
                reports.push(rep);
            }
            let fan = M2FanState {
                lambda: opt.duals.lambda,
                h_est: h,
            };
            let (f, b) = fan_step_m2(&g, &fan, &reports, &c, 0.1).unwrap();
            assert!((f.h_est - h).abs() < 1e-9);
            assert!((f.lambda - opt.duals.lambda).abs() < 1e-9);
            assert!((b.price - bc.price).abs() < 1e-9);
        }
    }

    #[test]
    fn fan_examples() {
        let g = GainSet::default();
        let c = ctx(1.0, 0.5);
        let reps = [FlowReport { m: 0.25, m_dot: 0.0 }, FlowReport { m: 0.25, m_dot: 0.0 }];
        let s = M2FanState { lambda: 0.2, h_est: 0.0 };
        let (f, b) = fan_step_m2(&g, &s, &reps, &c, 0.1).unwrap();
        assert_eq!(f.lambda, 0.2);
        assert_eq!(f.h_est, 0.5);
        assert!((b.price - (3.0 * 2.0 * 0.25 + 0.2)).abs() < 1e-12);
        let (_, b) = fan_step_m2(&g, &M2FanState::default(), &reps[..1], &ctx(0.0, 0.5), 0.1).unwrap();
        assert_eq!(b.price, 0.0);
    }

    #[test]
    fn message_errors() {
        let net = ring();
        let c = ctx(1.0, 0.5);
        let st = M2ZoneState::new(21.0, 0.1, 10.0).unwrap();
        let good = vec![st.message(1, 21.0), st.message(2, 21.0)];
        let run = |m: &[NeighborMsg]| {
            zone_step_m2(0, net.zone(0), net.neighbors(0), &c, &GainSet::default(), &st, 21.0, m, FanBroadcast::default(), 0.1)
        };
        assert!(run(&good).is_ok());
        assert!(matches!(run(&good[..1]), Err(Error::Message { zone: 0, .. })));
        let stray = vec![st.message(1, 21.0), st.message(2, 21.0), st.message(3, 21.0)];
        assert!(matches!(run(&stray), Err(Error::Message { zone: 0, .. })));
    }

    #[test]
    fn upper_flow_violation_raises_multiplier() {
        let net = ring();
        let c = ctx(1.0, 0.5);
        // Very low Z demands a large flow.
        let mut st = M2ZoneState::new(21.0, 0.1, 10.0).unwrap();
        st.z = 13.5;
        let m = vec![st.message(1, 21.0), st.message(2, 21.0)];
        let (n, _) = zone_step_m2(0, net.zone(0), net.neighbors(0), &c, &GainSet::default(), &st, 21.0, &m, FanBroadcast::default(), 0.1).unwrap();
        assert!(n.mu_up > 0.0);
    }

    #[test]
    fn update_reads_only_neighbors() {
        // Path 0 - 1 - 2: zone 0 must not react to zone 2.
        let e = |a, b| Edge { a, b, resistance: 23.0 };
        let net = BuildingNetwork::new(vec![zone(20.0), zone(21.0), zone(22.0)], vec![e(0, 1), e(1, 2)]).unwrap();
        let c = ctx(1.0, 0.5);
        let base: Vec<M2ZoneState> = (0..3).map(|i| M2ZoneState::new(21.0 + i as f64, 0.1, 10.0).unwrap()).collect();
        let temps = [21.0, 22.0, 23.0];
        let step = |states: &[M2ZoneState], temps: &[f64]| {
            let m = msgs(states, temps, &net, 0);
            zone_step_m2(0, net.zone(0), net.neighbors(0), &c, &GainSet::default(), &states[0], temps[0], &m, FanBroadcast { price: 0.3 }, 0.1)
                .unwrap()
        };
        let a = step(&base, &temps);
        let mut perturbed = base.clone();
        perturbed[2].z += 3.0;
        perturbed[2].mu_up = 5.0;
        let b = step(&perturbed, &[21.0, 22.0, 30.0]);
        assert_eq!(a, b);
    }
}
