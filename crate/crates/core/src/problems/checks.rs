use super::functions::{flow_for_temp, h_hessian};
use super::ProblemInstance;
use crate::error::Result;
use crate::thermal::OperatingContext;

/// Weight above which every zone's comfort term makes the separable
/// objective strictly convex: `w c_a² / (s φ η²)`.
pub fn strict_convexity_bound(ctx: &OperatingContext) -> f64 {
    let num = ctx.energy_weight * ctx.specific_heat.powi(2);
    if num == 0.0 {
        return 0.0;
    }
    num / (ctx.fan_coeff * ctx.fan_bound * ctx.cop.powi(2))
}

pub fn strict_convexity_check(inst: &ProblemInstance) -> bool {
    let bound = strict_convexity_bound(inst.ctx());
    inst.net().zones().iter().all(|z| z.weight > bound)
}

/// Per-zone set-point admissibility. The set point must sit on the cool
/// (heated) side of the ambient, and holding it must need at least the
/// minimum flow. Detached networks (independent units sharing only the cap)
/// use the weaker threshold `f_i(T^set) >= 0`.
pub fn assumption1_check(inst: &ProblemInstance) -> Vec<bool> {
    let outdoor = inst.ambient().outdoor;
    (0..inst.len())
        .map(|i| {
            let z = inst.net().zone(i);
            let side = if inst.sign(i) > 0.0 {
                z.set_point < outdoor
            } else {
                z.set_point > outdoor
            };
            let floor = if inst.net().is_detached() { 0.0 } else { z.flow_min };
            side && flow_for_temp(inst, i, z.set_point).is_ok_and(|f| f >= floor)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assumption3Report {
    pub passes: bool,
    pub min_eigenvalue: f64,
    /// Sample with the smallest eigenvalue.
    pub worst_sample: Vec<f64>,
    /// Smallest `H_ii - Σ_j |H_ij|` seen.
    pub min_dominance_margin: f64,
    pub diagonally_dominant: bool,
}

/// Positive semidefiniteness of the Hessian of `h` over the given samples.
pub fn assumption3_check(inst: &ProblemInstance, samples: &[Vec<f64>]) -> Result<Assumption3Report> {
    let mut report = Assumption3Report {
        passes: true,
        min_eigenvalue: f64::INFINITY,
        worst_sample: Vec::new(),
        min_dominance_margin: f64::INFINITY,
        diagonally_dominant: true,
    };
    for z in samples {
        let h = h_hessian(inst, z)?;
        let n = h.nrows();
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| h[(i, j)].abs()).sum();
            report.min_dominance_margin = report.min_dominance_margin.min(h[(i, i)] - off);
        }
        let eig = h.symmetric_eigenvalues().min();
        if eig < report.min_eigenvalue {
            report.min_eigenvalue = eig;
            report.worst_sample = z.clone();
        }
    }
    report.passes = report.min_eigenvalue >= -1e-9;
    report.diagonally_dominant = report.min_dominance_margin >= 0.0;
    Ok(report)
}

/// Tensor grid over the comfort box, coarsened so at most ~20k points are
/// returned.
pub fn comfort_box_samples(inst: &ProblemInstance, per_axis: usize) -> Vec<Vec<f64>> {
    let n = inst.len();
    let mut k = per_axis.max(2);
    while n > 0 && (k as f64).powi(n as i32) > 20_000.0 && k > 2 {
        k -= 1;
    }
    let axes: Vec<Vec<f64>> = inst
        .net()
        .zones()
        .iter()
        .map(|z| {
            (0..k)
                .map(|j| z.comfort_min + (z.comfort_max - z.comfort_min) * j as f64 / (k - 1) as f64)
                .collect()
        })
        .collect();
    let mut out = vec![Vec::with_capacity(n)];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::thermal::{AmbientSample, BuildingNetwork, Mode, ZoneParams};

    #[test]
    fn convexity_bound() {
        let mut c = ctx();
        assert!((strict_convexity_bound(&c) - 0.0608884661).abs() < 1e-9);
        c.energy_weight = 0.0;
        assert_eq!(strict_convexity_bound(&c), 0.0);
        let inst = two_zone_instance();
        assert!(strict_convexity_check(&inst));
        let mut net = inst.net().clone();
        net.set_zone(0, ZoneParams { weight: 0.0, ..net.zone(0).clone() }).unwrap();
        let r0 = ProblemInstance::new(net, inst.ctx().clone(), inst.ambient().clone()).unwrap();
        assert!(!strict_convexity_check(&r0));
    }

    #[test]
    fn assumption1_examples() {
        let mut z = zone(24.0, 1.5);
        z.flow_max = 0.6;
        let single = |z: ZoneParams, outdoor: f64| {
            ProblemInstance::new(
                BuildingNetwork::new(vec![z], vec![]).unwrap(),
                ctx(),
                AmbientSample::new(outdoor, vec![0.1]).unwrap(),
            )
            .unwrap()
        };
        assert!((flow_for_temp(&single(z.clone(), 30.0), 0, 24.0).unwrap() - 0.0441134952).abs() < 1e-9);
        assert_eq!(assumption1_check(&single(z.clone(), 30.0)), vec![true]);
        assert_eq!(assumption1_check(&single(z.clone(), 24.0)), vec![false]);
        let mut zm = z.clone();
        zm.flow_min = 0.05;
        assert_eq!(assumption1_check(&single(zm, 30.0)), vec![false]);

        // Heating: T° = 0, set point 20, supply 40, Q = 0.
        let mut c = ctx();
        c.mode = Mode::Heating;
        c.supply_temp = 40.0;
        let mut hz = zone(20.0, 2.0);
        hz.flow_max = 0.6;
        let heat = |min: f64| {
            let mut hz = hz.clone();
            hz.flow_min = min;
            ProblemInstance::new(
                BuildingNetwork::new(vec![hz], vec![]).unwrap(),
                c.clone(),
                AmbientSample::new(0.0, vec![0.0]).unwrap(),
            )
            .unwrap()
        };
        let f = flow_for_temp(&heat(0.0), 0, 20.0).unwrap();
        assert!((f - (-20.0 / 15.0) / (1.012 * -20.0)).abs() < 1e-12);
        assert_eq!(assumption1_check(&heat(f - 1e-6)), vec![true]);
        assert_eq!(assumption1_check(&heat(f + 1e-6)), vec![false]);
    }

    #[test]
    fn hessian_psd_on_two_zone_box() {
        let inst = two_zone_instance();
        let samples: Vec<Vec<f64>> = (0..50)
            .flat_map(|a| (0..50).map(move |b| vec![18.0 + 8.0 * a as f64 / 49.0, 18.0 + 8.0 * b as f64 / 49.0]))
            .collect();
        let r = assumption3_check(&inst, &samples).unwrap();
        assert!(r.passes, "{r:?}");
        assert!(r.min_eigenvalue > 0.0);
    }

    #[test]
    fn equal_temperatures_give_the_closed_form_margin() {
        let inst = two_zone_instance();
        let r = assumption3_check(&inst, &[vec![22.0, 22.0]]).unwrap();
        // Zone 1 row is the binding one.
        assert!((r.min_dominance_margin - 0.0031639990804).abs() < 1e-11);
        assert!(r.diagonally_dominant);
    }

    #[test]
    fn sample_grid_shape() {
        let inst = two_zone_instance();
        let s = comfort_box_samples(&inst, 5);
        assert_eq!(s.len(), 25);
        assert_eq!(s[0], vec![14.0, 14.0]);
        assert_eq!(s[24], vec![30.0, 30.0]);
    }
}
