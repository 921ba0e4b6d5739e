//! Method I by hand: four zone controllers and the fan price, stepped
//! against the decoupled plant under constant weather, then compared with
//! the relaxed-problem optimum. Zones only see their own temperature and the
//! broadcast price.
//!
//!     cargo run --release --example method1_loop

use zoneflow::control::{applied_flow, fan_step_m1, zone_step_m1, M1FanState, M1ZoneState};
use zoneflow::oracle::solve_relaxed;
use zoneflow::problems::{flow_for_temp, ProblemInstance};
use zoneflow::sim::Scenario;
use zoneflow::thermal::{rhs_approx, AmbientSample, ThermalState};

fn main() -> zoneflow::Result<()> {
    let sc = Scenario::bundled("scenario1")?;
    let (net, gains) = (&sc.net, &sc.gains);
    // Holding the set points takes about 0.5 kg/s; a tighter cap makes the
    // fan price bind.
    let mut ctx = sc.ctx.clone();
    ctx.total_flow_cap = 0.45;
    let ctx = &ctx;
    let amb = AmbientSample::new(32.0, vec![0.30, 0.30, 0.28, 0.25])?;
    let inst = ProblemInstance::new(net.clone(), ctx.clone(), amb.clone())?;
    let dt = 0.1;

    let mut temps: Vec<f64> = net.zones().iter().map(|z| z.set_point).collect();
    let mut zones = (0..net.len())
        .map(|i| {
            let z = net.zone(i);
            let m0 = flow_for_temp(&inst, i, temps[i])?.clamp(z.flow_min, z.flow_max);
            M1ZoneState::new(temps[i], m0, dt)
        })
        .collect::<zoneflow::Result<Vec<_>>>()?;
    let mut fan = M1FanState::default();

    let steps = (6.0 * 3600.0 / dt) as usize;
    for k in 0..=steps {
        if k % (3600 * 10) == 0 {
            let total: f64 = zones.iter().map(|s| s.m).sum();
            println!(
                "{:>2} h  T = {:.3?}  Σm = {total:.4}  λ = {:.4}",
                k / 36000,
                temps,
                fan.lambda
            );
        }
        for (i, s) in zones.iter_mut().enumerate() {
            *s = zone_step_m1(net.zone(i), ctx, gains, s, temps[i], fan.lambda, dt)?;
        }
        let flows: Vec<f64> = zones.iter().zip(net.zones()).map(|(s, z)| applied_flow(s.m, z.flow_max)).collect();
        fan = fan_step_m1(gains, &fan, flows.iter().sum(), ctx.total_flow_cap, dt)?;
        let d = rhs_approx(net, ctx, &ThermalState { temps: temps.clone(), time: 0.0 }, &flows, &amb)?;
        for (t, dtemp) in temps.iter_mut().zip(d) {
            *t += dt * dtemp;
        }
    }

    let opt = solve_relaxed(&inst)?;
    let z: Vec<f64> = zones.iter().map(|s| s.z).collect();
    let m: Vec<f64> = zones.iter().map(|s| s.m).collect();
    println!("\ncontroller Z = {z:.4?}\n    oracle Z = {:.4?}", opt.pt.z);
    println!("controller m = {m:.4?}\n    oracle m = {:.4?}", opt.pt.m);
    println!("controller λ = {:.4}, oracle λ = {:.4}", fan.lambda, opt.duals.lambda);
    Ok(())
}
