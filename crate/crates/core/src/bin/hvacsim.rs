use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zoneflow::problems::{assumption1_check, assumption3_check, comfort_box_samples, strict_convexity_bound, ProblemInstance};
use zoneflow::sim::{
    audit, resolve_scenario, run_with, summary_text, sweep, tradeoff_table, tradeoff_text, AuditWindow, ControllerKind,
    ParamKey, RunOptions, Scenario,
};
use zoneflow::thermal::AmbientSample;
use zoneflow::Error;

/// Closed-loop HVAC airflow control simulator.
///
/// SCENARIO is a TOML file or a bundled name (scenario1, scenario2).
#[derive(Parser)]
#[command(name = "hvacsim", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario, write its trajectory CSV and print a summary.
    Simulate {
        scenario: String,
        /// Output directory (overrides HVACSIM_OUT_DIR; default ".").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tick in seconds.
        #[arg(long)]
        dt: Option<f64>,
        /// Ticks between CSV rows.
        #[arg(long)]
        stride: Option<usize>,
        /// Exit with status 4 if any stationary audit fails.
        #[arg(long)]
        strict: bool,
    },
    /// Audit one window (hours, H1:H2) against the oracle.
    Audit {
        scenario: String,
        #[arg(long)]
        window: AuditWindow,
    },
    /// Rerun a scenario for several values of one parameter.
    Sweep {
        scenario: String,
        /// energy_weight (w), total_flow_cap (m_bar), supply_temp or zones.<i>.<field>
        #[arg(long)]
        param: String,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a scenario and print the assumption checks.
    Check { scenario: String },
}

const CONFIG: u8 = 2;
const NUMERIC: u8 = 3;
const AUDIT: u8 = 4;

fn code(e: &Error) -> u8 {
    match e {
        Error::NonFinite { .. }
        | Error::Singular(_)
        | Error::SupplyTemperature { .. }
        | Error::NegativeMultiplier { .. }
        | Error::NoSlaterPoint(_)
        | Error::NoFeasiblePoint(_)
        | Error::Message { .. } => NUMERIC,
        _ => CONFIG,
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("HVACSIM_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code(&e))
        }
    }
}

fn execute(cmd: Cmd) -> zoneflow::Result<u8> {
    match cmd {
        Cmd::Simulate {
            scenario,
            out,
            dt,
            stride,
            strict,
        } => {
            let mut sc = resolve_scenario(&scenario)?;
            if let Some(dt) = dt {
                sc = sc.with_dt(dt)?;
            }
            if let Some(stride) = stride {
                sc.stride = stride;
                sc.validate()?;
            }
            let art = run_with(
                &sc,
                &RunOptions {
                    out_dir: Some(out_dir(out)),
                    ..RunOptions::default()
                },
            )?;
            print!("{}", summary_text(&art));
            if let Some(p) = &art.csv_path {
                println!("trajectory: {}", p.display());
            }
            if art.failed() {
                return Ok(NUMERIC);
            }
            if strict && art.audits.iter().any(|a| a.verdict == Some(false)) {
                return Ok(AUDIT);
            }
            Ok(0)
        }
        Cmd::Audit { scenario, window } => {
            let sc = resolve_scenario(&scenario)?;
            window.check(&sc)?;
            let rep = audit(&sc, window)?;
            println!("window {}", rep.window);
            println!("stationary: {}", rep.stationary);
            println!(
                "gaps: Z {:.3e}, m {:.3e}, duals {:.3e}, |T-Z| {:.3e}",
                rep.z_gap, rep.m_gap, rep.dual_gap, rep.tracking
            );
            if let Some(k) = &rep.kkt {
                println!(
                    "kkt: stationarity {:.3e}, complementarity {:.3e}, primal {:.3e}",
                    k.stationarity, k.complementarity, k.primal_violation
                );
            }
            if rep.coupling_folded {
                println!("neighbor heat folded into zone gains");
            }
            if let Some(e) = &rep.error {
                println!("oracle error: {e}");
            }
            match rep.verdict {
                Some(true) => {
                    println!("verdict: pass");
                    Ok(0)
                }
                Some(false) => {
                    println!("verdict: FAIL");
                    Ok(AUDIT)
                }
                None => {
                    println!("verdict: none (non-stationary window)");
                    Ok(0)
                }
            }
        }
        Cmd::Sweep {
            scenario,
            param,
            values,
            out,
        } => {
            let sc = resolve_scenario(&scenario)?;
            let key = ParamKey::parse(&param)?;
            let points = sweep(&sc, key, &values, Some(out_dir(out)))?;
            let mut status = 0;
            for p in &points {
                println!("{key} = {}", p.value);
                print!("{}", summary_text(&p.artifact));
                println!();
                if p.artifact.failed() {
                    status = NUMERIC;
                }
            }
            print!("{}", tradeoff_text(key, &tradeoff_table(&sc, &points)));
            Ok(status)
        }
        Cmd::Check { scenario } => {
            let sc = resolve_scenario(&scenario)?;
            check_report(&sc)?;
            Ok(0)
        }
    }
}

fn check_report(sc: &Scenario) -> zoneflow::Result<()> {
    println!(
        "scenario {} ({}, {} plant): valid",
        sc.name,
        sc.controller,
        format!("{:?}", sc.plant).to_lowercase()
    );
    let bound = strict_convexity_bound(&sc.ctx);
    let min_r = sc.net.zones().iter().map(|z| z.weight).fold(f64::INFINITY, f64::min);
    println!("strict convexity: min r_i = {min_r} > w c_a²/(s φ η²) = {bound:.6}: {}", min_r > bound);
    for bp in sc.schedule.breakpoints() {
        let inst = ProblemInstance::new(sc.net.clone(), sc.ctx.clone(), AmbientSample::new(bp.outdoor, bp.gains.clone())?)?;
        let a1 = assumption1_check(&inst);
        print!("breakpoint {:>5} h: set points reachable {:?}", bp.hour, a1);
        if sc.controller == ControllerKind::Method2 {
            let a3 = assumption3_check(&inst, &comfort_box_samples(&inst, 7))?;
            print!(
                ", Hessian PSD {} (min eigenvalue {:.3e}), diagonally dominant {}",
                a3.passes, a3.min_eigenvalue, a3.diagonally_dominant
            );
        }
        println!();
    }
    Ok(())
}
