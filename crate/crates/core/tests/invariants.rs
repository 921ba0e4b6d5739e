mod common;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use zoneflow::oracle::{solve_general, solve_relaxed};
use zoneflow::problems::{
    coupled_flows, feasibility_check, objective_approx, objective_general, DecisionPoint, ProblemKind, PRIMAL_TOL,
};
use zoneflow::sim::ParamKey;
use zoneflow::thermal::{rhs_full, steady_state_for_flows, BuildingNetwork, Mode, ThermalState};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steady_state_zeroes_the_plant_derivative(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = StdRng::seed_from_u64(seed);
        let zones = (0..n)
            .map(|_| common::zone(rng.gen_range(8.0..30.0), 22.0, 1.5, 0.5))
            .collect();
        let net = BuildingNetwork::new(zones, common::random_edges(&mut rng, n)).unwrap();
        let ctx = common::ctx(Mode::Cooling, 12.8, 1.0, 0.5);
        let amb = zoneflow::thermal::AmbientSample::new(
            rng.gen_range(20.0..36.0),
            (0..n).map(|_| rng.gen_range(0.0..0.4)).collect(),
        )
        .unwrap();
        let flows: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.5)).collect();
        let t = steady_state_for_flows(&net, &ctx, &amb, &flows).unwrap();
        let d = rhs_full(&net, &ctx, &ThermalState { temps: t, time: 0.0 }, &flows, &amb).unwrap();
        prop_assert!(d.iter().all(|x| x.abs() < 1e-12), "{d:?}");
    }

    #[test]
    fn oracle_optima_are_feasible_and_beat_random_probes(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mode = if seed % 2 == 0 { Mode::Cooling } else { Mode::Heating };
        let inst = loop {
            let n = rng.gen_range(1..=4);
            if let Some(i) = common::random_instance(&mut rng, mode, n) {
                break i;
            }
        };
        let relaxed = solve_relaxed(&inst).unwrap();
        let general = solve_general(&inst).unwrap();
        prop_assert!(feasibility_check(&inst, &relaxed.pt, ProblemKind::Relaxed).unwrap().feasible);
        prop_assert!(feasibility_check(&inst, &general.pt, ProblemKind::General).unwrap().feasible);
        let f_relaxed = objective_approx(&inst, &relaxed.pt).unwrap();
        let f_general = objective_general(&inst, &general.pt.z).unwrap();
        for _ in 0..200 {
            let z: Vec<f64> = inst
                .net()
                .zones()
                .iter()
                .map(|p| rng.gen_range(p.comfort_min..p.comfort_max))
                .collect();
            if feasibility_check(&inst, &DecisionPoint { z: z.clone(), m: vec![0.0; z.len()] }, ProblemKind::General)
                .unwrap()
                .max_violation
                <= 0.0
            {
                prop_assert!(objective_general(&inst, &z).unwrap() >= f_general - 1e-9);
            }
            let m: Vec<f64> = (0..z.len())
                .map(|i| {
                    let f = zoneflow::problems::flow_for_temp(&inst, i, z[i]).unwrap();
                    f.max(inst.net().zone(i).flow_min) + rng.gen_range(0.0..0.02)
                })
                .collect();
            let pt = DecisionPoint { z, m };
            if feasibility_check(&inst, &pt, ProblemKind::Relaxed).unwrap().max_violation <= 0.0 {
                prop_assert!(objective_approx(&inst, &pt).unwrap() >= f_relaxed - 1e-9);
            }
        }
    }

    #[test]
    fn coupled_flows_hold_the_steady_state(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = loop {
            if let Some(i) = common::random_instance(&mut rng, Mode::Cooling, 3) {
                break i;
            }
        };
        let z: Vec<f64> = inst.net().zones().iter().map(|p| rng.gen_range(p.comfort_min..p.comfort_max)).collect();
        let m = coupled_flows(&inst, &z).unwrap();
        prop_assume!(m.iter().all(|&x| x >= 0.0));
        let t = steady_state_for_flows(inst.net(), inst.ctx(), inst.ambient(), &m).unwrap();
        prop_assert!(common::max_abs_diff(&t, &z) < PRIMAL_TOL);
    }

    #[test]
    fn parameter_keys_round_trip(i in 0usize..50, field in 0usize..5) {
        let name = ["set_point", "comfort_min", "comfort_max", "weight", "flow_max"][field];
        let text = format!("zones.{i}.{name}");
        let key = ParamKey::parse(&text).unwrap();
        prop_assert_eq!(key.to_string(), text);
    }
}

// Four heated zones where moving every zone toward its lower comfort bound
// pushes zone 2's coupled flow under its minimum before the total clears the
// cap. The feasible set lies off that ray.
#[test]
fn general_oracle_finds_a_start_off_the_set_point_ray() {
    let mut rng = StdRng::seed_from_u64(1509122947296773095);
    let inst = loop {
        let n = rng.gen_range(1..=4);
        if let Some(i) = common::random_instance(&mut rng, Mode::Heating, n) {
            break i;
        }
    };
    assert_eq!(inst.len(), 4);
    let r = solve_general(&inst).unwrap();
    assert!(r.converged);
    assert!(r.report.cap_active);
    assert!(feasibility_check(&inst, &r.pt, ProblemKind::General).unwrap().feasible);
}
