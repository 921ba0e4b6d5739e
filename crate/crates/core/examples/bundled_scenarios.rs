//! Runs both bundled scenarios and prints their summaries.
//!
//!     cargo run --release --example bundled_scenarios

use zoneflow::sim::{run, summary_text, Scenario, BUNDLED};

fn main() -> zoneflow::Result<()> {
    for name in BUNDLED {
        let sc = Scenario::bundled(name)?;
        let art = run(&sc);
        println!("{}", summary_text(&art));
    }
    Ok(())
}
