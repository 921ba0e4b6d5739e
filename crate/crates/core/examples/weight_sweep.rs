//! Comfort against power: reruns the Method II scenario over a range of
//! energy weights and tabulates deviation and power, both along the
//! trajectory and at the audited optima.
//!
//!     cargo run --release --example weight_sweep

use zoneflow::sim::{sweep, tradeoff_table, tradeoff_text, ParamKey, Scenario};

fn main() -> zoneflow::Result<()> {
    let sc = Scenario::bundled("scenario2")?;
    let weights = [0.25, 0.5, 1.0, 2.0, 4.0];
    let points = sweep(&sc, ParamKey::EnergyWeight, &weights, None)?;
    let rows = tradeoff_table(&sc, &points);
    print!("{}", tradeoff_text(ParamKey::EnergyWeight, &rows));
    Ok(())
}
