//! Steady-state problem quantities at a point of the four-zone building:
//! flow maps, total flow with its gradient and Hessian, objectives and the
//! assumption checks the controllers rely on.
//!
//!     cargo run --release --example problem_checks

use zoneflow::problems::{
    assumption1_check, assumption3_check, comfort_box_samples, coupled_flows, flow_for_temp, h_gradient, h_hessian,
    h_of_z, objective_approx, objective_full, strict_convexity_bound, DecisionPoint, ProblemInstance,
};
use zoneflow::sim::Scenario;
use zoneflow::thermal::AmbientSample;

fn main() -> zoneflow::Result<()> {
    let sc = Scenario::bundled("scenario1")?;
    let inst = ProblemInstance::new(sc.net.clone(), sc.ctx.clone(), AmbientSample::new(32.0, vec![0.3, 0.3, 0.25, 0.2])?)?;
    let z = vec![20.5, 21.0, 21.5, 21.5];

    let decoupled: Vec<f64> = (0..4).map(|i| flow_for_temp(&inst, i, z[i])).collect::<Result<_, _>>()?;
    let coupled = coupled_flows(&inst, &z)?;
    println!("Z = {z:?}");
    println!("decoupled flows f_i(Z_i): {decoupled:.4?}");
    println!("coupled flows:            {coupled:.4?}");
    println!("h(Z) = {:.5} kg/s", h_of_z(&inst, &z)?);
    println!("∇h = {:.5?}", h_gradient(&inst, &z)?);
    println!("∇²h = {:.5}", h_hessian(&inst, &z)?);

    let pt = DecisionPoint { z, m: decoupled };
    println!("objective, cubic fan:     {:.6}", objective_full(&inst, &pt)?);
    println!("objective, quadratic fan: {:.6}", objective_approx(&inst, &pt)?);

    let bound = strict_convexity_bound(inst.ctx());
    println!("\nstrict convexity needs r_i > {bound:.6}");
    println!("set points reachable: {:?}", assumption1_check(&inst));
    let a3 = assumption3_check(&inst, &comfort_box_samples(&inst, 7))?;
    println!(
        "Hessian PSD over the comfort box: {} (min eigenvalue {:.3e}, diagonally dominant {})",
        a3.passes, a3.min_eigenvalue, a3.diagonally_dominant
    );
    Ok(())
}
