//! The two-zone example: brute-force grid optimum against the oracle, and
//! the feasible temperature region shrinking as the flow cap tightens.
//!
//!     cargo run --release --example two_zone_grid

use zoneflow::oracle::{feasible_mask_2zone, grid_search_2zone, grid_search_2zone_refined, solve_general};
use zoneflow::problems::{ProblemInstance, ProblemKind};
use zoneflow::thermal::{AmbientSample, BuildingNetwork, Edge, Mode, OperatingContext, ZoneParams};

fn zone(r: f64) -> ZoneParams {
    ZoneParams {
        capacitance: 20.0,
        resistance_out: r,
        set_point: 22.0,
        comfort_min: 18.0,
        comfort_max: 26.0,
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
    let inst = ProblemInstance::new(net, ctx, AmbientSample::new(30.0, vec![0.1, 0.2])?)?;

    let oracle = solve_general(&inst)?;
    let coarse = grid_search_2zone(&inst, 400, ProblemKind::General)?;
    let fine = grid_search_2zone_refined(&inst, 400, ProblemKind::General, 3)?;
    println!("oracle      Z = {:.5?}", oracle.pt.z);
    println!("grid 400²   Z = {:.5?}  (spacing {:.1e})", coarse.pt.z, coarse.spacing[0]);
    println!("refined ×3  Z = {:.5?}  (spacing {:.1e})", fine.pt.z, fine.spacing[0]);

    println!("\nfeasible (Z1, Z2) cells on a 60×60 grid over 14–30 °C:");
    let masks: Vec<_> = [0.7, 0.5, 0.3]
        .iter()
        .map(|&cap| feasible_mask_2zone(&inst, (14.0, 30.0), 60, cap))
        .collect::<Result<_, _>>()?;
    for (cap, m) in [0.7, 0.5, 0.3].iter().zip(&masks) {
        println!("  cap {cap}: {} cells, interval sections {}", m.count(), m.sections_are_intervals());
    }
    println!("nested: {}", masks[1].is_subset_of(&masks[0]) && masks[2].is_subset_of(&masks[1]));

    // Coarse picture of the 0.5 kg/s region: rows are Z1 (top = 14 °C).
    let m = &masks[1];
    for row in m.cells.iter().step_by(4) {
        let line: String = row.iter().step_by(2).map(|&c| if c { '#' } else { '.' }).collect();
        println!("  {line}");
    }
    Ok(())
}
