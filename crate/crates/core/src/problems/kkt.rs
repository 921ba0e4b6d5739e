use super::functions::{coupled_flows, flow_for_temp, flow_slope, h_gradient, h_of_z};
use super::{DecisionPoint, DualPoint, ProblemInstance, PRIMAL_TOL, ZETA_TOL};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// Coupled steady state with equality flows.
    Full,
    /// Decoupled steady state with equality flows.
    Approx,
    /// Decoupled, flow link relaxed to `f_i(Z_i) <= m_i`.
    Relaxed,
    /// Temperatures only; flows recovered from the coupled steady state.
    General,
}

/// Which inequality constraints are active (within [`PRIMAL_TOL`]) in a zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ZoneActivity {
    pub flow_link: bool,
    pub temp_upper: bool,
    pub temp_lower: bool,
    pub flow_upper: bool,
    pub flow_lower: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub stationarity: f64,
    pub complementarity: f64,
    pub primal_violation: f64,
    /// Relaxation tightness; `None` for the temperature-only problem.
    pub tight: Option<bool>,
    pub active: Vec<ZoneActivity>,
    pub cap_active: bool,
    /// Per-zone stationarity residuals (`Z` rows, then `m` rows for the
    /// relaxed problem).
    pub residuals: Vec<f64>,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.stationarity.max(self.complementarity).max(self.primal_violation)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol && self.tight != Some(false)
    }
}

struct Acc {
    comp: f64,
    viol: f64,
}

impl Acc {
    // g <= 0 with multiplier y
    fn push(&mut self, y: f64, g: f64) -> bool {
        self.comp = self.comp.max((y * g).abs());
        self.viol = self.viol.max(g);
        g.abs() <= PRIMAL_TOL
    }
}

/// Evaluates the optimality system of the relaxed separable problem.
pub fn kkt_residual_relaxed(inst: &ProblemInstance, pt: &DecisionPoint, duals: &DualPoint) -> Result<KktReport> {
    let n = inst.len();
    inst.check_len("z", pt.z.len())?;
    inst.check_len("m", pt.m.len())?;
    duals.check(n, true)?;
    let c = inst.ctx();
    let (ca, w) = (c.specific_heat, c.energy_weight);
    let mut acc = Acc { comp: 0.0, viol: 0.0 };
    let mut active = Vec::with_capacity(n);
    let mut res_z = Vec::with_capacity(n);
    let mut res_m = Vec::with_capacity(n);
    let mut tight = true;
    for i in 0..n {
        let p = inst.net().zone(i);
        let sigma = inst.sign(i);
        let (z, m) = (pt.z[i], pt.m[i]);
        let f = flow_for_temp(inst, i, z)?;
        let fp = flow_slope(inst, i, z)?;
        res_z.push(
            p.weight * (z - p.set_point) + sigma * (w / c.cop) * ca * m + duals.zeta[i] * fp + duals.nu_up[i]
                - duals.nu_lo[i],
        );
        res_m.push(
            w * c.fan_coeff * c.fan_bound * m + sigma * (w / c.cop) * ca * (z - inst.supply(i)) - duals.zeta[i]
                + duals.mu_up[i]
                - duals.mu_lo[i]
                + duals.lambda,
        );
        let a = ZoneActivity {
            flow_link: acc.push(duals.zeta[i], f - m),
            temp_upper: acc.push(duals.nu_up[i], z - p.comfort_max),
            temp_lower: acc.push(duals.nu_lo[i], p.comfort_min - z),
            flow_upper: acc.push(duals.mu_up[i], m - p.flow_max),
            flow_lower: acc.push(duals.mu_lo[i], p.flow_min - m),
        };
        tight &= duals.zeta[i] > ZETA_TOL || (f - m).abs() <= PRIMAL_TOL;
        active.push(a);
    }
    let cap_active = acc.push(duals.lambda, pt.m.iter().sum::<f64>() - c.total_flow_cap);
    let stationarity = res_z.iter().chain(&res_m).fold(0.0f64, |a, r| a.max(r.abs()));
    res_z.extend(res_m);
    Ok(KktReport {
        stationarity,
        complementarity: acc.comp,
        primal_violation: acc.viol,
        tight: Some(tight),
        active,
        cap_active,
        residuals: res_z,
    })
}

/// Evaluates the optimality system of the temperature-only problem. The
/// stationarity rows are the gradient of its Lagrangian in `Z`.
pub fn kkt_residual_general(inst: &ProblemInstance, z: &[f64], duals: &DualPoint) -> Result<KktReport> {
    let n = inst.len();
    inst.check_len("z", z.len())?;
    duals.check(n, false)?;
    let c = inst.ctx();
    let (ca, w) = (c.specific_heat, c.energy_weight);
    let h = h_of_z(inst, z)?;
    let dh = h_gradient(inst, z)?;
    let price = 3.0 * w * c.fan_coeff * h * h + duals.lambda;
    let flows = coupled_flows(inst, z)?;
    let mut acc = Acc { comp: 0.0, viol: 0.0 };
    let mut active = Vec::with_capacity(n);
    let mut res = Vec::with_capacity(n);
    for i in 0..n {
        let p = inst.net().zone(i);
        let sigma = inst.sign(i);
        let self_cond = 1.0 / p.resistance_out + inst.net().coupling_conductance(i);
        let mut g = p.weight * (z[i] - p.set_point) - sigma * w / (c.cop * p.resistance_out)
            + price * dh[i]
            + duals.nu_up[i]
            - duals.nu_lo[i]
            - sigma * duals.mu_up[i] * (self_cond + p.flow_max * ca)
            + sigma * duals.mu_lo[i] * (self_cond + p.flow_min * ca);
        for &(j, r) in inst.net().neighbors(i) {
            g += inst.sign(j) * (duals.mu_up[j] - duals.mu_lo[j]) / r;
        }
        res.push(g);
        let d = z[i] - inst.supply(i);
        let load = flows[i] * ca * d;
        active.push(ZoneActivity {
            flow_link: false,
            temp_upper: acc.push(duals.nu_up[i], z[i] - p.comfort_max),
            temp_lower: acc.push(duals.nu_lo[i], p.comfort_min - z[i]),
            flow_upper: acc.push(duals.mu_up[i], sigma * (load - p.flow_max * ca * d)),
            flow_lower: acc.push(duals.mu_lo[i], sigma * (p.flow_min * ca * d - load)),
        });
    }
    let cap_active = acc.push(duals.lambda, h - c.total_flow_cap);
    Ok(KktReport {
        stationarity: res.iter().fold(0.0f64, |a, r| a.max(r.abs())),
        complementarity: acc.comp,
        primal_violation: acc.viol,
        tight: None,
        active,
        cap_active,
        residuals: res,
    })
}

/// Signed slack of one constraint: positive means violated. Equality rows
/// report their absolute residual as a flow mismatch (kg/s).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSlack {
    pub label: &'static str,
    pub zone: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub entries: Vec<ConstraintSlack>,
    pub max_violation: f64,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn slack(&self, label: &str, zone: Option<usize>) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.label == label && e.zone == zone)
            .map(|e| e.value)
    }
}

/// Constraint slacks of `pt` for the chosen problem. For
/// [`ProblemKind::General`] the flows in `pt` are ignored and recomputed
/// from the temperatures.
pub fn feasibility_check(inst: &ProblemInstance, pt: &DecisionPoint, kind: ProblemKind) -> Result<FeasibilityReport> {
    inst.check_len("z", pt.z.len())?;
    let m = match kind {
        ProblemKind::General => coupled_flows(inst, &pt.z)?,
        _ => {
            inst.check_len("m", pt.m.len())?;
            pt.m.clone()
        }
    };
    let ca = inst.ctx().specific_heat;
    let mut entries = Vec::new();
    let mut push = |label, zone, value| entries.push(ConstraintSlack { label, zone, value });
    #[allow(clippy::needless_range_loop)]
    for i in 0..inst.len() {
        let p = inst.net().zone(i);
        let z = pt.z[i];
        match kind {
            ProblemKind::Full | ProblemKind::Approx => {
                let coupling = if kind == ProblemKind::Full {
                    inst.net().coupling_heat(i, &pt.z)
                } else {
                    0.0
                };
                // Expressed in flow units so the tolerance matches the boxes.
                let balance = m[i]
                    - (inst.exogenous_load(i) - z / p.resistance_out + coupling) / (ca * inst.offset(i, z)?);
                push("balance", Some(i), balance.abs());
            }
            ProblemKind::Relaxed => push("flow_link", Some(i), flow_for_temp(inst, i, z)? - m[i]),
            ProblemKind::General => {}
        }
        push("temp_upper", Some(i), z - p.comfort_max);
        push("temp_lower", Some(i), p.comfort_min - z);
        push("flow_upper", Some(i), m[i] - p.flow_max);
        push("flow_lower", Some(i), p.flow_min - m[i]);
    }
    push("total_flow", None, m.iter().sum::<f64>() - inst.ctx().total_flow_cap);
    let max_violation = entries.iter().fold(0.0f64, |a, e| a.max(e.value));
    Ok(FeasibilityReport {
        feasible: max_violation <= PRIMAL_TOL,
        max_violation,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::thermal::AmbientSample;

    #[test]
    fn two_zone_point_is_feasible_for_coupled_problem() {
        let inst = two_zone_instance();
        let pt = DecisionPoint {
            z: vec![22.0, 22.0],
            m: vec![0.068024, 0.075185],
        };
        let r = feasibility_check(&inst, &pt, ProblemKind::Full).unwrap();
        assert!(r.feasible, "{r:?}");
        assert!(r.slack("balance", Some(0)).unwrap() < 1e-5);
    }

    #[test]
    fn box_violation_and_boundary_cap() {
        let inst = two_zone_instance();
        let pt = DecisionPoint {
            z: vec![22.0, 22.0],
            m: vec![0.6, 0.1],
        };
        let r = feasibility_check(&inst, &pt, ProblemKind::Relaxed).unwrap();
        assert!((r.slack("flow_upper", Some(0)).unwrap() - 0.1).abs() < 1e-12);
        assert!(!r.feasible);
        let pt = DecisionPoint {
            z: vec![22.0, 22.0],
            m: vec![0.35, 0.35],
        };
        let r = feasibility_check(&inst, &pt, ProblemKind::Relaxed).unwrap();
        assert!(r.slack("total_flow", None).unwrap().abs() < 1e-15);
        assert!(r.feasible);
    }

    #[test]
    fn interior_zero_duals_have_no_complementarity() {
        let inst = two_zone_instance();
        let pt = DecisionPoint {
            z: vec![22.0, 23.0],
            m: vec![0.2, 0.2],
        };
        let r = kkt_residual_relaxed(&inst, &pt, &DualPoint::zeros(2, true)).unwrap();
        assert_eq!(r.complementarity, 0.0);
        assert_eq!(r.tight, Some(false));
        let r = kkt_residual_general(&inst, &pt.z, &DualPoint::zeros(2, false)).unwrap();
        assert_eq!(r.complementarity, 0.0);
        assert!(r.stationarity > 0.0);
    }

    #[test]
    fn unconstrained_general_optimum_with_zero_weight() {
        let mut c = ctx();
        c.energy_weight = 0.0;
        c.total_flow_cap = 0.7;
        let inst = ProblemInstance::new(
            four_zone([20.0, 20.5, 21.0, 21.0]),
            c,
            AmbientSample::new(29.0, vec![0.12, 0.12, 0.08, 0.06]).unwrap(),
        )
        .unwrap();
        let z = vec![20.0, 20.5, 21.0, 21.0];
        let r = kkt_residual_general(&inst, &z, &DualPoint::zeros(4, false)).unwrap();
        assert_eq!(r.stationarity, 0.0);
        assert_eq!(r.primal_violation, 0.0);
    }

    #[test]
    fn negative_dual_rejected() {
        let inst = two_zone_instance();
        let mut d = DualPoint::zeros(2, true);
        d.lambda = -1.0;
        let pt = DecisionPoint {
            z: vec![22.0, 22.0],
            m: vec![0.1, 0.1],
        };
        assert!(kkt_residual_relaxed(&inst, &pt, &d).is_err());
    }
}
