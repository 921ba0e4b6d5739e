use nalgebra::DMatrix;

use super::ProblemInstance;
use crate::error::Result;

/// `f_i(Z) = ((T° - Z)/R_i + Q_i) / (c_a (Z - T^s))`: the flow that holds
/// zone `i` at `Z` when its neighbors are ignored.
pub fn flow_for_temp(inst: &ProblemInstance, i: usize, z: f64) -> Result<f64> {
    let d = inst.offset(i, z)?;
    let r = inst.net().zone(i).resistance_out;
    Ok((inst.exogenous_load(i) - z / r) / (inst.ctx().specific_heat * d))
}

pub fn flow_slope(inst: &ProblemInstance, i: usize, z: f64) -> Result<f64> {
    let d = inst.offset(i, z)?;
    Ok(supply_side_load(inst, i) / (inst.ctx().specific_heat * d * d))
}

pub fn flow_curvature(inst: &ProblemInstance, i: usize, z: f64) -> Result<f64> {
    let d = inst.offset(i, z)?;
    Ok(-2.0 * supply_side_load(inst, i) / (inst.ctx().specific_heat * d * d * d))
}

// (T^s - T°)/R - Q
fn supply_side_load(inst: &ProblemInstance, i: usize) -> f64 {
    inst.supply(i) / inst.net().zone(i).resistance_out - inst.exogenous_load(i)
}

// N_i = (T° - Z_i)/R_i + Σ_j (Z_j - Z_i)/R_ij + Q_i
fn net_load(inst: &ProblemInstance, i: usize, z: &[f64]) -> f64 {
    inst.exogenous_load(i) - z[i] / inst.net().zone(i).resistance_out + inst.net().coupling_heat(i, z)
}

/// Flows that hold the coupled network at `z` in steady state.
pub fn coupled_flows(inst: &ProblemInstance, z: &[f64]) -> Result<Vec<f64>> {
    inst.check_len("z", z.len())?;
    let ca = inst.ctx().specific_heat;
    (0..inst.len())
        .map(|i| Ok(net_load(inst, i, z) / (ca * inst.offset(i, z[i])?)))
        .collect()
}

/// Total steady-state flow `h(Z)`.
pub fn h_of_z(inst: &ProblemInstance, z: &[f64]) -> Result<f64> {
    Ok(coupled_flows(inst, z)?.iter().sum())
}

pub fn h_gradient(inst: &ProblemInstance, z: &[f64]) -> Result<Vec<f64>> {
    inst.check_len("z", z.len())?;
    let ca = inst.ctx().specific_heat;
    let d: Vec<f64> = (0..inst.len()).map(|i| inst.offset(i, z[i])).collect::<Result<_>>()?;
    Ok((0..inst.len())
        .map(|i| {
            let a = coupled_supply_load(inst, i, z);
            let cross: f64 = inst.net().neighbors(i).iter().map(|&(j, r)| 1.0 / (r * ca * d[j])).sum();
            a / (ca * d[i] * d[i]) + cross
        })
        .collect())
}

pub fn h_hessian(inst: &ProblemInstance, z: &[f64]) -> Result<DMatrix<f64>> {
    inst.check_len("z", z.len())?;
    let n = inst.len();
    let ca = inst.ctx().specific_heat;
    let d: Vec<f64> = (0..n).map(|i| inst.offset(i, z[i])).collect::<Result<_>>()?;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = -2.0 * coupled_supply_load(inst, i, z) / (ca * d[i].powi(3));
        for &(j, r) in inst.net().neighbors(i) {
            h[(i, j)] = -1.0 / (r * ca * d[i] * d[i]) - 1.0 / (r * ca * d[j] * d[j]);
        }
    }
    Ok(h)
}

// A_i = (T^s - T°)/R_i + Σ_j (T^s - Z_j)/R_ij - Q_i
fn coupled_supply_load(inst: &ProblemInstance, i: usize, z: &[f64]) -> f64 {
    let ts = inst.supply(i);
    supply_side_load(inst, i) + inst.net().neighbors(i).iter().map(|&(j, r)| (ts - z[j]) / r).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn two_zone_values() {
        let inst = two_zone_instance();
        let m = coupled_flows(&inst, &[22.0, 22.0]).unwrap();
        close(m[0], 0.06802428825113135, 1e-12);
        close(m[1], 0.07518473964598728, 1e-12);
        close(h_of_z(&inst, &[22.0, 22.0]).unwrap(), 0.14320902789711865, 1e-12);
        close(flow_for_temp(&inst, 0, 24.0).unwrap(), 0.0441134952, 1e-9);
        let h = h_hessian(&inst, &[22.0, 22.0]).unwrap();
        close(h[(0, 0)], 0.004461182304, 1e-11);
        close(h[(0, 1)], -0.001297183224, 1e-11);
        close(h[(1, 1)], 0.004533091374, 1e-11);
        close(h[(0, 0)] + h[(0, 1)], 0.0031639990804, 1e-11);
    }

    #[test]
    fn supply_temperature_is_an_error() {
        let inst = two_zone_instance();
        assert!(flow_for_temp(&inst, 0, 12.8).is_err());
        assert!(h_gradient(&inst, &[12.8, 22.0]).is_err());
        assert!(coupled_flows(&inst, &[22.0]).is_err());
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(z1 in 18.0f64..28.0, z2 in 18.0f64..28.0) {
            let inst = two_zone_instance();
            let z = [z1, z2];
            let eps = 1e-5;
            let g = h_gradient(&inst, &z).unwrap();
            let hs = h_hessian(&inst, &z).unwrap();
            for k in 0..2 {
                let mut p = z; p[k] += eps;
                let mut q = z; q[k] -= eps;
                let fd = (h_of_z(&inst, &p).unwrap() - h_of_z(&inst, &q).unwrap()) / (2.0 * eps);
                prop_assert!((fd - g[k]).abs() < 1e-8);
                let gp = h_gradient(&inst, &p).unwrap();
                let gq = h_gradient(&inst, &q).unwrap();
                for l in 0..2 {
                    prop_assert!(((gp[l] - gq[l]) / (2.0 * eps) - hs[(l, k)]).abs() < 1e-7);
                }
            }
            let fd = (flow_for_temp(&inst, 0, z1 + eps).unwrap() - flow_for_temp(&inst, 0, z1 - eps).unwrap()) / (2.0 * eps);
            prop_assert!((fd - flow_slope(&inst, 0, z1).unwrap()).abs() < 1e-8);
            let fd2 = (flow_slope(&inst, 0, z1 + eps).unwrap() - flow_slope(&inst, 0, z1 - eps).unwrap()) / (2.0 * eps);
            prop_assert!((fd2 - flow_curvature(&inst, 0, z1).unwrap()).abs() < 1e-7);
            prop_assert!(flow_curvature(&inst, 0, z1).unwrap() > 0.0);
        }

        #[test]
        fn coupled_flows_match_decoupled_at_uniform_temperature(z in 16.0f64..28.0) {
            let inst = two_zone_instance();
            let m = coupled_flows(&inst, &[z, z]).unwrap();
            for (i, mi) in m.iter().enumerate() {
                prop_assert!((mi - flow_for_temp(&inst, i, z).unwrap()).abs() < 1e-12);
            }
        }
    }
}
