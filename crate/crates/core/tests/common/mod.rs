#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use zoneflow::problems::{assumption1_check, ProblemInstance};
use zoneflow::thermal::{AmbientSample, BuildingNetwork, Edge, Mode, OperatingContext, ZoneParams};

pub fn ctx(mode: Mode, supply: f64, w: f64, cap: f64) -> OperatingContext {
    OperatingContext {
        mode,
        supply_temp: supply,
        specific_heat: 1.012,
        cop: 2.9,
        fan_coeff: 2.0,
        fan_bound: 1.0,
        energy_weight: w,
        total_flow_cap: cap,
    }
}

pub fn zone(r: f64, set_point: f64, band: f64, flow_max: f64) -> ZoneParams {
    ZoneParams {
        capacitance: 20.0,
        resistance_out: r,
        set_point,
        comfort_min: set_point - band,
        comfort_max: set_point + band,
        flow_min: 0.01,
        flow_max,
        weight: 0.1,
        supply_temp_override: None,
    }
}

/// Connected random graph: a path plus a few chords.
pub fn random_edges(rng: &mut StdRng, n: usize) -> Vec<Edge> {
    let mut edges: Vec<Edge> = (1..n)
        .map(|b| Edge {
            a: rng.gen_range(0..b),
            b,
            resistance: rng.gen_range(15.0..40.0),
        })
        .collect();
    for _ in 0..n / 2 {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && !edges.iter().any(|e| (e.a, e.b) == (a, b) || (e.a, e.b) == (b, a)) {
            edges.push(Edge {
                a,
                b,
                resistance: rng.gen_range(15.0..40.0),
            });
        }
    }
    edges
}

/// Random building with `n` zones in `mode`. The cap is drawn around the
/// flow needed to hold the set points, so it binds in a fair share of draws.
/// Returns `None` for draws that break set-point reachability or need
/// more than 90% of a zone's flow limit at the set point.
pub fn random_instance(rng: &mut StdRng, mode: Mode, n: usize) -> Option<ProblemInstance> {
    let (supply, outdoor, gain_hi) = match mode {
        Mode::Cooling => (rng.gen_range(12.0..14.5), rng.gen_range(26.0..35.0), 0.4),
        Mode::Heating => (rng.gen_range(32.0..40.0), rng.gen_range(-5.0..10.0), 0.2),
    };
    let zones: Vec<ZoneParams> = (0..n)
        .map(|_| {
            let mut z = zone(
                rng.gen_range(10.0..20.0),
                rng.gen_range(19.5..23.0),
                rng.gen_range(1.0..2.5),
                rng.gen_range(0.3..0.6),
            );
            z.capacitance = rng.gen_range(10.0..30.0);
            z.flow_min = rng.gen_range(0.002..0.02);
            z.weight = rng.gen_range(0.1..1.0);
            z
        })
        .collect();
    let edges = random_edges(rng, n);
    let gains: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..gain_hi)).collect();
    let sum_max: f64 = zones.iter().map(|z| z.flow_max).sum();
    let mut c = ctx(mode, supply, rng.gen_range(0.05..1.0), 0.5 * sum_max);
    // φ >= 1 keeps the strict-convexity bound below the 0.1 weight floor.
    c.fan_bound = sum_max.max(1.0);
    let net = BuildingNetwork::new(zones, edges).ok()?;
    let inst = ProblemInstance::new(net, c.clone(), AmbientSample::new(outdoor, gains).ok()?).ok()?;
    if !assumption1_check(&inst).iter().all(|&ok| ok) {
        return None;
    }
    let holds: Vec<f64> = (0..n)
        .map(|i| zoneflow::problems::flow_for_temp(&inst, i, inst.net().zone(i).set_point).unwrap())
        .collect();
    if holds.iter().zip(inst.net().zones()).any(|(f, z)| *f >= 0.9 * z.flow_max) {
        return None;
    }
    let hold: f64 = holds.iter().sum();
    // Least total flow anywhere in the comfort box; the cap stays above it.
    let least: f64 = inst
        .net()
        .zones()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let f = |t| zoneflow::problems::flow_for_temp(&inst, i, t).unwrap();
            f(z.comfort_min).min(f(z.comfort_max)).max(z.flow_min)
        })
        .sum();
    c.total_flow_cap = (hold * rng.gen_range(0.75..1.3)).max(1.05 * least).min(0.95 * sum_max);
    inst.with_context(c).ok()
}

/// Draws until `count` admissible instances are found.
pub fn random_instances(rng: &mut StdRng, count: usize, modes: &[Mode], max_zones: usize) -> Vec<ProblemInstance> {
    let mut out = Vec::with_capacity(count);
    let mut k = 0;
    while out.len() < count {
        let mode = modes[k % modes.len()];
        let n = rng.gen_range(1..=max_zones);
        if let Some(inst) = random_instance(rng, mode, n) {
            out.push(inst);
            k += 1;
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Prints the verdict line for an acceptance criterion and fails the test
/// if it did not pass.
pub fn report(id: u32, title: &str, pass: bool, detail: &str) {
    eprintln!("criterion {id} ({title}): {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}
