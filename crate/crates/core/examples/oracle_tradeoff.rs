//! Solves the relaxed separable problem and the temperature-only problem for
//! the four-zone building, audits both with their KKT residuals, then traces
//! the comfort/energy tradeoff as the energy weight grows.
//!
//!     cargo run --release --example oracle_tradeoff

use zoneflow::oracle::{solve_general, solve_relaxed, tradeoff_sweep, TradeoffProblem};
use zoneflow::problems::ProblemInstance;
use zoneflow::sim::Scenario;
use zoneflow::thermal::AmbientSample;

fn main() -> zoneflow::Result<()> {
    let sc = Scenario::bundled("scenario1")?;
    let inst = ProblemInstance::new(sc.net.clone(), sc.ctx.clone(), AmbientSample::new(32.0, vec![0.3, 0.3, 0.28, 0.25])?)?;

    let r = solve_relaxed(&inst)?;
    println!("relaxed: Z = {:.4?}", r.pt.z);
    println!("         m = {:.4?}  (Σ = {:.4})", r.pt.m, r.pt.m.iter().sum::<f64>());
    println!("         ζ = {:.4?}, λ = {:.4}", r.duals.zeta, r.duals.lambda);
    println!(
        "         tight {:?}, KKT residual {:.2e}, {} iterations",
        r.report.tight,
        r.report.max_residual(),
        r.iterations
    );

    let g = solve_general(&inst)?;
    println!("general: Z = {:.4?}", g.pt.z);
    println!("         m = {:.4?}  (Σ = {:.4})", g.pt.m, g.pt.m.iter().sum::<f64>());
    println!("         λ = {:.4}, KKT residual {:.2e}", g.duals.lambda, g.report.max_residual());

    // Above w = 1.64 the 0.1 comfort weights no longer make the relaxed
    // objective strictly convex.
    let weights = [0.1, 0.3, 0.6, 1.0, 1.5];
    for (label, problem) in [("relaxed", TradeoffProblem::Relaxed), ("general", TradeoffProblem::General)] {
        println!("\n{label} tradeoff\n{:>6} {:>10} {:>10} {:>10}", "w", "comfort", "energy", "Σm");
        for p in tradeoff_sweep(&inst, &weights, problem)? {
            println!("{:>6} {:>10.5} {:>10.5} {:>10.5}", p.weight, p.comfort, p.energy, p.total_flow);
        }
    }
    Ok(())
}
