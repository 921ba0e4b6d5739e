//! Audits one window of a bundled run: the controller's window averages
//! against the oracle optimum for the ambient of that window, plus KKT
//! residuals of the averaged point.
//!
//!     cargo run --release --example audit_window [scenario] [start_h] [end_h]

use zoneflow::sim::{audit, AuditWindow, Scenario};

fn main() -> zoneflow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("scenario2", String::as_str);
    let h = |k: usize, d: f64| args.get(k).and_then(|s| s.parse().ok()).unwrap_or(d);
    let window = AuditWindow::new(h(1, 23.0), h(2, 24.0));

    let sc = Scenario::bundled(name)?;
    let rep = audit(&sc, window)?;
    println!("{name}, window {}", rep.window);
    println!("stationary: {}", rep.stationary);
    println!("mean T     = {:.5?}", rep.mean_temps);
    println!("averaged Z = {:.5?}", rep.point.z);
    println!("averaged m = {:.5?}", rep.point.m);
    if let Some(o) = &rep.oracle {
        println!("oracle Z   = {:.5?}", o.pt.z);
        println!("oracle m   = {:.5?}", o.pt.m);
        println!("oracle λ   = {:.5}", o.duals.lambda);
    }
    if let Some(d) = &rep.duals {
        println!("averaged λ = {:.5}", d.lambda);
    }
    println!(
        "gaps: Z {:.2e}, m {:.2e}, duals {:.2e}, |T-Z| {:.2e}",
        rep.z_gap, rep.m_gap, rep.dual_gap, rep.tracking
    );
    if let Some(k) = &rep.kkt {
        println!("KKT residual {:.2e}", k.max_residual());
    }
    let verdict = match rep.verdict {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "non-stationary, not judged",
    };
    println!("verdict: {verdict}");
    Ok(())
}
