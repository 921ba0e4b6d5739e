//! Scenario files, closed-loop runs, equilibrium audits and reports.

mod audit;
mod report;
mod run;
mod scenario;

pub use audit::{default_windows, AuditReport, AuditWindow, AUDIT_TOL, DEFAULT_WINDOW_HOURS};
pub use report::{summary_text, sweep, tradeoff_is_monotone, tradeoff_table, tradeoff_text, SweepPoint, TradeoffRow};
pub use run::{
    csv_columns, run, run_with, write_csv, RunArtifact, RunOptions, RunSummary, Sample, ZoneSummary, CSV_SCHEMA_VERSION,
    SATURATION_TOL,
};
pub use scenario::{
    load_scenario, resolve_scenario, ControllerKind, ParamKey, ParameterEvent, Scenario, ZoneField, BUNDLED,
};

/// Single-window audit: runs the scenario and audits only `window`.
pub fn audit(sc: &Scenario, window: AuditWindow) -> crate::Result<AuditReport> {
    let art = run_with(
        sc,
        &RunOptions {
            windows: vec![window],
            only_windows: true,
            ..RunOptions::default()
        },
    )?;
    match (art.audits.into_iter().next(), art.failure) {
        (Some(a), _) => Ok(a),
        (None, Some(e)) => Err(e),
        (None, None) => Err(crate::Error::Window(format!("{window} produced no samples"))),
    }
}
