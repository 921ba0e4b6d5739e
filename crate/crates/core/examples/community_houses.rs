//! Three detached houses sharing one supply fan: two cooled, one heated with
//! its own supply temperature. The shared cap drops at 3 h and the price
//! splits the remaining flow between the cooled houses.
//!
//!     cargo run --release --example community_houses

use zoneflow::sim::{load_scenario, run, summary_text};

fn main() -> zoneflow::Result<()> {
    let sc = load_scenario(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/community.toml"))?;
    println!("detached: {}", sc.net.is_detached());
    for (i, z) in sc.net.zones().iter().enumerate() {
        let kind = if sc.ctx.sign_of(z) > 0.0 { "cooled" } else { "heated" };
        println!("  house {}: {kind}, set point {}", i + 1, z.set_point);
    }
    let art = run(&sc);
    println!();
    print!("{}", summary_text(&art));

    println!("\nhourly flows (kg/s):");
    for s in art.samples.iter().filter(|s| (s.t_hours.fract()).abs() < 1e-9) {
        println!("  {:>4.1} h  m = {:.4?}  Σ = {:.4}  cap {}", s.t_hours, s.m, s.total_flow, s.cap);
    }
    Ok(())
}
