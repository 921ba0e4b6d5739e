//! Simulates a scenario and writes its trajectory CSV.
//!
//!     cargo run --release --example trajectory_csv -- scenario1 out/

use std::path::PathBuf;

use zoneflow::sim::{resolve_scenario, run_with, RunOptions};

fn main() -> zoneflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "scenario1".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out".into()));
    let sc = resolve_scenario(&name)?;
    let art = run_with(
        &sc,
        &RunOptions {
            out_dir: Some(out),
            ..RunOptions::default()
        },
    )?;
    if let Some(p) = &art.csv_path {
        println!("{} rows -> {}", art.samples.len(), p.display());
    }
    if let Some(e) = &art.failure {
        println!("run failed: {e}");
    }
    Ok(())
}
