use std::fmt::Write as _;
use std::path::PathBuf;

use super::run::{power, run_with, RunArtifact, RunOptions};
use super::scenario::{ParamKey, Scenario};
use crate::error::Result;

/// Human-readable summary of a run.
pub fn summary_text(art: &RunArtifact) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} ({})", art.scenario, art.controller);
    if art.samples.is_empty() {
        let _ = writeln!(s, "no data");
        if let Some(e) = &art.failure {
            let _ = writeln!(s, "FAILED: {e}");
        }
        return s;
    }
    let last = art.samples.last().map_or(0.0, |r| r.t_hours);
    let _ = writeln!(s, "rows: {}, simulated to {last} h", art.samples.len());
    if let Some(e) = &art.failure {
        let _ = writeln!(s, "FAILED: {e} (trajectory truncated)");
    }
    let _ = writeln!(s, "\ncomfort deviation |T - T_set| per zone (°C):");
    for (i, z) in art.summary.zones.iter().enumerate() {
        let _ = writeln!(s, "  zone {}: max {:.4}, mean {:.4}", i + 1, z.max_deviation, z.mean_deviation);
    }
    let _ = writeln!(s, "energy proxy (mean coil + fan power): {:.4} kW", art.summary.energy_proxy);
    if art.summary.saturation.is_empty() {
        let _ = writeln!(s, "total flow never at the cap");
    } else {
        let _ = writeln!(s, "total flow at the cap:");
        for (a, b) in &art.summary.saturation {
            let _ = writeln!(s, "  {a:.2} h - {b:.2} h");
        }
    }
    let _ = writeln!(s, "\naudits:");
    if art.audits.is_empty() {
        let _ = writeln!(s, "  none");
    }
    for a in &art.audits {
        let verdict = match a.verdict {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "non-stationary",
        };
        let _ = write!(
            s,
            "  {}: {verdict}; gaps Z {:.2e}, m {:.2e}, duals {:.2e}, |T-Z| {:.2e}",
            a.window, a.z_gap, a.m_gap, a.dual_gap, a.tracking
        );
        if let Some(k) = &a.kkt {
            let _ = write!(s, ", kkt {:.2e}", k.max_residual());
        }
        if a.coupling_folded {
            let _ = write!(s, " (neighbor heat folded into gains)");
        }
        if let Some(e) = &a.error {
            let _ = write!(s, "; error: {e}");
        }
        let _ = writeln!(s);
    }
    let zetas: Vec<f64> = art.audits.iter().filter_map(|a| a.min_zeta()).collect();
    if !zetas.is_empty() {
        if zetas.iter().all(|&z| z > 0.0) {
            let _ = writeln!(s, "ζ > 0 for all zones at every audit window (relaxation tight)");
        } else {
            let _ = writeln!(s, "some ζ = 0 at an audit window; tightness rests on the flow link holding");
        }
    }
    s
}

/// One run of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub artifact: RunArtifact,
}

/// Tradeoff figures for one swept value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffRow {
    pub value: f64,
    /// Over the whole trajectory.
    pub mean_deviation: f64,
    pub energy_proxy: f64,
    /// Averaged over the oracle optima of all audit windows.
    pub audited_deviation: f64,
    pub audited_power: f64,
}

/// Runs the scenario once per value, in parallel threads. Events on the
/// swept key are dropped so the value holds for the whole horizon.
pub fn sweep(sc: &Scenario, key: ParamKey, values: &[f64], out_dir: Option<PathBuf>) -> Result<Vec<SweepPoint>> {
    let variants = values
        .iter()
        .map(|&v| {
            let mut s = sc.clone();
            s.events.retain(|e| e.key != key);
            key.apply(&mut s.net, &mut s.ctx, v)?;
            s.name = format!("{}_{key}={v}", sc.name);
            s.validate()?;
            Ok((v, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let opts = RunOptions {
        out_dir,
        ..RunOptions::default()
    };
    std::thread::scope(|scope| {
        let handles: Vec<_> = variants
            .iter()
            .map(|(v, s)| {
                let opts = &opts;
                scope.spawn(move || run_with(s, opts).map(|artifact| SweepPoint { value: *v, artifact }))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    })
}

pub fn tradeoff_table(sc: &Scenario, points: &[SweepPoint]) -> Vec<TradeoffRow> {
    let mut rows: Vec<TradeoffRow> = points
        .iter()
        .map(|p| {
            let art = &p.artifact;
            let n = art.summary.zones.len().max(1) as f64;
            let optima: Vec<_> = art.audits.iter().filter_map(|a| a.oracle.as_ref()).collect();
            let k = optima.len().max(1) as f64;
            let sp: Vec<f64> = sc.net.zones().iter().map(|z| z.set_point).collect();
            let audited_deviation = optima
                .iter()
                .map(|o| o.pt.z.iter().zip(&sp).map(|(z, s)| (z - s).abs()).sum::<f64>() / n)
                .sum::<f64>()
                / k;
            let audited_power = optima.iter().map(|o| power(&sc.net, &sc.ctx, &o.pt.z, &o.pt.m)).sum::<f64>() / k;
            TradeoffRow {
                value: p.value,
                mean_deviation: art.summary.zones.iter().map(|z| z.mean_deviation).sum::<f64>() / n,
                energy_proxy: art.summary.energy_proxy,
                audited_deviation,
                audited_power,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    rows
}

/// Comfort deviation nondecreasing and power nonincreasing in the swept
/// value, at the audited optima.
pub fn tradeoff_is_monotone(rows: &[TradeoffRow]) -> bool {
    rows.windows(2).all(|w| {
        w[1].audited_deviation >= w[0].audited_deviation - 1e-9 && w[1].audited_power <= w[0].audited_power + 1e-9
    })
}

pub fn tradeoff_text(key: ParamKey, rows: &[TradeoffRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>14} {:>14} {:>14} {:>16} {:>16}",
        key.to_string(),
        "mean |T-Tset|",
        "power kW",
        "audited |Z-Tset|",
        "audited power"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>14} {:>14.5} {:>14.5} {:>16.5} {:>16.5}",
            r.value, r.mean_deviation, r.energy_proxy, r.audited_deviation, r.audited_power
        );
    }
    let _ = writeln!(
        s,
        "tradeoff {}",
        if tradeoff_is_monotone(rows) { "monotone" } else { "NOT monotone" }
    );
    s
}
