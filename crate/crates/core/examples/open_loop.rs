//! Two coupled zones under constant flows: integrate the plant, compare with
//! the analytic steady state, and check the state matrix is Hurwitz.
//!
//!     cargo run --release --example open_loop

use zoneflow::schedule::DisturbanceSchedule;
use zoneflow::thermal::{
    hurwitz_check, integrate, steady_state_for_flows, AmbientSample, BuildingNetwork, Edge, IntegrationSpec, Mode,
    OperatingContext, PlantModel, ZoneParams,
};

fn zone(r: f64) -> ZoneParams {
    ZoneParams {
        capacitance: 20.0,
        resistance_out: r,
        set_point: 22.0,
        comfort_min: 20.5,
        comfort_max: 23.5,
        flow_min: 0.01,
        flow_max: 0.5,
        weight: 0.1,
        supply_temp_override: None,
    }
}

fn main() -> zoneflow::Result<()> {
    let net = BuildingNetwork::new(
        vec![zone(15.0), zone(16.0)],
        vec![Edge {
            a: 0,
            b: 1,
            resistance: 18.0,
        }],
    )?;
    let ctx = OperatingContext {
        mode: Mode::Cooling,
        supply_temp: 12.8,
        specific_heat: 1.012,
        cop: 2.9,
        fan_coeff: 2.0,
        fan_bound: 1.0,
        energy_weight: 1.0,
        total_flow_cap: 0.7,
    };
    let amb = AmbientSample::new(30.0, vec![0.1, 0.2])?;
    let flows = vec![0.08, 0.06];

    let h = hurwitz_check(&net, &ctx, &flows)?;
    println!("spectral abscissa {:.3e} 1/s (stable: {})", h.abscissa, h.stable);

    let target = steady_state_for_flows(&net, &ctx, &amb, &flows)?;
    for plant in [PlantModel::Full, PlantModel::Approx] {
        let traj = integrate(
            plant,
            &net,
            &ctx,
            &DisturbanceSchedule::constant(&amb),
            |_| flows.clone(),
            &[26.0, 18.0],
            IntegrationSpec {
                t_span: (0.0, 3600.0),
                dt: 1.0,
                stride: 300,
            },
        )?;
        println!("\n{plant:?} plant");
        for s in &traj {
            println!("  {:>4} min  T = [{:.4}, {:.4}]", s.time / 60.0, s.temps[0], s.temps[1]);
        }
    }
    println!("\ncoupled steady state: [{:.4}, {:.4}]", target[0], target[1]);
    Ok(())
}
