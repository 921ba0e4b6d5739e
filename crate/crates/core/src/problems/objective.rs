use super::functions::h_of_z;
use super::{DecisionPoint, ProblemInstance};
use crate::error::Result;

/// `½ Σ r_i (Z_i - T_i^set)²`
pub fn comfort_cost(inst: &ProblemInstance, z: &[f64]) -> Result<f64> {
    inst.check_len("z", z.len())?;
    Ok(inst
        .net()
        .zones()
        .iter()
        .zip(z)
        .map(|(p, zi)| 0.5 * p.weight * (zi - p.set_point).powi(2))
        .sum())
}

fn coil_power(inst: &ProblemInstance, pt: &DecisionPoint) -> f64 {
    let ca = inst.ctx().specific_heat;
    (0..inst.len())
        .map(|i| ca * pt.m[i] * (pt.z[i] - inst.supply(i)).abs())
        .sum::<f64>()
        / inst.ctx().cop
}

fn check(inst: &ProblemInstance, pt: &DecisionPoint) -> Result<()> {
    inst.check_len("z", pt.z.len())?;
    inst.check_len("m", pt.m.len())
}

/// Original objective: comfort plus weighted coil and cubic fan power.
pub fn objective_full(inst: &ProblemInstance, pt: &DecisionPoint) -> Result<f64> {
    check(inst, pt)?;
    let c = inst.ctx();
    let total: f64 = pt.m.iter().sum();
    Ok(comfort_cost(inst, &pt.z)? + c.energy_weight * (coil_power(inst, pt) + c.fan_coeff * total.powi(3)))
}

/// Energy part of the separable objective: coil power plus `½ s φ Σ m²`.
pub fn energy_cost_approx(inst: &ProblemInstance, pt: &DecisionPoint) -> Result<f64> {
    check(inst, pt)?;
    let c = inst.ctx();
    let fan: f64 = pt.m.iter().map(|m| 0.5 * c.fan_coeff * c.fan_bound * m * m).sum();
    Ok(coil_power(inst, pt) + fan)
}

/// Separable objective with the quadratic fan surrogate.
pub fn objective_approx(inst: &ProblemInstance, pt: &DecisionPoint) -> Result<f64> {
    Ok(comfort_cost(inst, &pt.z)? + inst.ctx().energy_weight * energy_cost_approx(inst, pt)?)
}

/// Energy part of the temperature-only objective. The coil term telescopes
/// to `|Σ (T° - Z_i)/R_i + Q_i| / η` because coupling heat cancels in sum.
pub fn energy_cost_general(inst: &ProblemInstance, z: &[f64]) -> Result<f64> {
    inst.check_len("z", z.len())?;
    let c = inst.ctx();
    let load: f64 = (0..inst.len())
        .map(|i| inst.exogenous_load(i) - z[i] / inst.net().zone(i).resistance_out)
        .sum();
    Ok(load.abs() / c.cop + c.fan_coeff * h_of_z(inst, z)?.powi(3))
}

pub fn objective_general(inst: &ProblemInstance, z: &[f64]) -> Result<f64> {
    Ok(comfort_cost(inst, z)? + inst.ctx().energy_weight * energy_cost_general(inst, z)?)
}
