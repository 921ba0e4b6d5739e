//! Method II by hand on the coupled plant: each zone exchanges
//! `(T, Z, μ⁺, μ⁻)` with its graph neighbors, reports its flow to the fan,
//! and the fan broadcasts one price. The loop settles on the optimum of the
//! temperature-only problem.
//!
//!     cargo run --release --example method2_loop

use zoneflow::control::{applied_flow, fan_step_m2, zone_step_m2, FanBroadcast, M2FanState, M2ZoneState, NeighborMsg};
use zoneflow::oracle::solve_general;
use zoneflow::problems::{coupled_flows, ProblemInstance};
use zoneflow::sim::Scenario;
use zoneflow::thermal::{rhs_full, AmbientSample, ThermalState};

fn main() -> zoneflow::Result<()> {
    let sc = Scenario::bundled("scenario2")?;
    let net = &sc.net;
    let gains = &sc.gains;
    let mut ctx = sc.ctx.clone();
    ctx.energy_weight = 1.0;
    ctx.total_flow_cap = 0.45;
    let amb = AmbientSample::new(32.0, vec![0.30, 0.30, 0.28, 0.25])?;
    let inst = ProblemInstance::new(net.clone(), ctx.clone(), amb.clone())?;
    let dt = 0.1;

    let mut temps: Vec<f64> = net.zones().iter().map(|z| z.set_point).collect();
    let m0 = coupled_flows(&inst, &temps)?;
    let mut zones = (0..net.len())
        .map(|i| M2ZoneState::new(temps[i], m0[i].clamp(net.zone(i).flow_min, net.zone(i).flow_max), dt))
        .collect::<zoneflow::Result<Vec<_>>>()?;
    let mut fan = M2FanState::default();
    let mut broadcast = FanBroadcast::default();

    let steps = (8.0 * 3600.0 / dt) as usize;
    for k in 0..=steps {
        if k % (2 * 36000) == 0 {
            println!("{:>2} h  T = {:.3?}  price = {:.4}  λ = {:.4}", k / 36000, temps, broadcast.price, fan.lambda);
        }
        let old = zones.clone();
        let mut reports = Vec::with_capacity(net.len());
        for (i, s) in zones.iter_mut().enumerate() {
            let msgs: Vec<NeighborMsg> = net.neighbors(i).iter().map(|&(j, _)| old[j].message(j, temps[j])).collect();
            let (next, report) =
                zone_step_m2(i, net.zone(i), net.neighbors(i), &ctx, gains, s, temps[i], &msgs, broadcast, dt)?;
            *s = next;
            reports.push(report);
        }
        (fan, broadcast) = fan_step_m2(gains, &fan, &reports, &ctx, dt)?;
        let flows: Vec<f64> = zones.iter().zip(net.zones()).map(|(s, z)| applied_flow(s.m, z.flow_max)).collect();
        let d = rhs_full(net, &ctx, &ThermalState { temps: temps.clone(), time: 0.0 }, &flows, &amb)?;
        for (t, dtemp) in temps.iter_mut().zip(d) {
            *t += dt * dtemp;
        }
    }

    let opt = solve_general(&inst)?;
    let z: Vec<f64> = zones.iter().map(|s| s.z).collect();
    let m: Vec<f64> = zones.iter().map(|s| s.m).collect();
    println!("\ncontroller Z = {z:.4?}\n    oracle Z = {:.4?}", opt.pt.z);
    println!("controller m = {m:.4?}\n    oracle m = {:.4?}", opt.pt.m);
    println!("controller λ = {:.4}, oracle λ = {:.4}", fan.lambda, opt.duals.lambda);
    Ok(())
}
