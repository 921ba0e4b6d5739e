//! Reference solver for the steady-state problems.
//!
//! A log-barrier Newton method followed by an active-set polish. It shares no
//! code with the controllers and carries its own flow-map derivatives, so an
//! error in either side shows up as a disagreement.

mod barrier;
mod grid;
mod programs;

pub use grid::{feasible_mask_2zone, grid_search_2zone, grid_search_2zone_refined, FeasibleMask, GridResult};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problems::{
    assumption3_check, comfort_box_samples, comfort_cost, coupled_flows, energy_cost_approx, energy_cost_general,
    kkt_residual_general, kkt_residual_relaxed, objective_full, strict_convexity_check, DecisionPoint, DualPoint,
    KktReport, ProblemInstance,
};
use barrier::{ConvexProgram, ITERATION_CAP};
use programs::{General, PhaseOne, Raw, Relaxed};

/// Residual below which an oracle result counts as converged.
pub const ORACLE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub pt: DecisionPoint,
    pub duals: DualPoint,
    pub report: KktReport,
    pub iterations: usize,
    pub converged: bool,
    /// Whether the active-set polish succeeded (otherwise the barrier
    /// iterate is returned as is).
    pub polished: bool,
}

/// Optimum of the relaxed separable problem.
pub fn solve_relaxed(inst: &ProblemInstance) -> Result<OracleResult> {
    if !strict_convexity_check(inst) {
        return Err(Error::Assumption {
            name: "strict-convexity",
            detail: "a comfort weight does not exceed w c_a² / (s φ η²)".into(),
        });
    }
    let raw = Raw::new(inst);
    let n = raw.n;
    let x0 = slater_probe(&raw, |z| {
        let base: Vec<f64> = (0..n).map(|i| raw.flow(i, z[i]).0.max(raw.m_min[i])).collect();
        if (0..n).any(|i| base[i] >= raw.m_max[i]) {
            return None;
        }
        let room = raw.cap - base.iter().sum::<f64>();
        if room <= 0.0 {
            return None;
        }
        let spread: f64 = (0..n).map(|i| raw.m_max[i] - base[i]).sum();
        let a = (0.5 * room / spread).min(0.5);
        let m = (0..n).map(|i| base[i] + a * (raw.m_max[i] - base[i]));
        Some(DVector::from_iterator(2 * n, z.iter().copied().chain(m)))
    })?;
    let sol = barrier::solve(&Relaxed(&raw), x0);
    let mut pt = DecisionPoint {
        z: sol.x.rows(0, n).iter().copied().collect(),
        m: sol.x.rows(n, n).iter().copied().collect(),
    };
    let y = &sol.y;
    let duals = DualPoint {
        zeta: (0..n).map(|i| y[5 * i]).collect(),
        nu_up: (0..n).map(|i| y[5 * i + 1]).collect(),
        nu_lo: (0..n).map(|i| y[5 * i + 2]).collect(),
        mu_up: (0..n).map(|i| y[5 * i + 3]).collect(),
        mu_lo: (0..n).map(|i| y[5 * i + 4]).collect(),
        lambda: y[5 * n],
    };
    // Without an energy weight the flows are only pinned by the constraints;
    // pick the smallest admissible flow in every zone the cap leaves free.
    if raw.w == 0.0 && duals.lambda == 0.0 {
        for i in 0..n {
            pt.m[i] = raw.flow(i, pt.z[i]).0.max(raw.m_min[i]);
        }
    }
    let report = kkt_residual_relaxed(inst, &pt, &duals)?;
    Ok(finish(pt, duals, report, sol.iterations, sol.polished))
}

/// Optimum of the temperature-only problem; flows recovered from the
/// coupled steady state.
pub fn solve_general(inst: &ProblemInstance) -> Result<OracleResult> {
    let a3 = assumption3_check(inst, &comfort_box_samples(inst, 7))?;
    if !a3.passes {
        return Err(Error::Assumption {
            name: "hessian-psd",
            detail: format!(
                "Hessian of the total flow has eigenvalue {:.3e} at {:?}",
                a3.min_eigenvalue, a3.worst_sample
            ),
        });
    }
    let raw = Raw::new(inst);
    let n = raw.n;
    let strict = |x: DVector<f64>| {
        let prog = General(&raw);
        (0..prog.n_constraints())
            .all(|k| prog.constraint(k, &x) < 0.0)
            .then_some(x)
    };
    // Coupling can make the set-point ray miss a feasible set that lies off
    // it, so fall back to a phase-I solve.
    let x0 = match slater_probe(&raw, |z| strict(DVector::from_column_slice(z))) {
        Ok(x) => x,
        Err(ray) => {
            let phase = PhaseOne(&General(&raw));
            let sol = barrier::solve(&phase, phase.start(&DVector::from_column_slice(&raw.set_point)));
            strict(sol.x.rows(0, n).into_owned()).ok_or(ray)?
        }
    };
    let sol = barrier::solve(&General(&raw), x0);
    let z: Vec<f64> = sol.x.iter().copied().collect();
    let y = &sol.y;
    let duals = DualPoint {
        zeta: Vec::new(),
        nu_up: (0..n).map(|i| y[4 * i]).collect(),
        nu_lo: (0..n).map(|i| y[4 * i + 1]).collect(),
        mu_up: (0..n).map(|i| y[4 * i + 2]).collect(),
        mu_lo: (0..n).map(|i| y[4 * i + 3]).collect(),
        lambda: y[4 * n],
    };
    let report = kkt_residual_general(inst, &z, &duals)?;
    let m = coupled_flows(inst, &z)?;
    Ok(finish(DecisionPoint { z, m }, duals, report, sol.iterations, sol.polished))
}

fn finish(pt: DecisionPoint, duals: DualPoint, report: KktReport, iterations: usize, polished: bool) -> OracleResult {
    let converged = iterations < ITERATION_CAP && report.max_residual() <= ORACLE_TOL;
    OracleResult {
        pt,
        duals,
        report,
        iterations,
        converged,
        polished,
    }
}

/// Strictly feasible start: walk from the set points toward the comfort
/// bound on the ambient side (upper when cooling, lower when heating), find
/// the feasible stretch of that segment by scan plus bisection, and start
/// from its middle.
fn slater_probe<F>(raw: &Raw, feasible: F) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Option<DVector<f64>>,
{
    const END: f64 = 0.999;
    const STEPS: usize = 400;
    let at = |theta: f64| -> Vec<f64> {
        (0..raw.n)
            .map(|i| {
                let bound = if raw.sigma[i] > 0.0 { raw.t_max[i] } else { raw.t_min[i] };
                raw.set_point[i] + theta * (bound - raw.set_point[i])
            })
            .collect()
    };
    let ok = |theta: f64| feasible(&at(theta)).is_some();
    let thetas: Vec<f64> = (0..=STEPS).map(|k| END * k as f64 / STEPS as f64).collect();
    let flags: Vec<bool> = thetas.iter().map(|&t| ok(t)).collect();
    // Longest run of feasible samples.
    let (mut best, mut cur) = ((0, 0), None::<usize>);
    for (k, &f) in flags.iter().enumerate() {
        match (f, cur) {
            (true, None) => cur = Some(k),
            (false, Some(s)) => {
                if k - s > best.1 - best.0 {
                    best = (s, k);
                }
                cur = None;
            }
            _ => {}
        }
    }
    if let Some(s) = cur {
        if flags.len() - s > best.1 - best.0 {
            best = (s, flags.len());
        }
    }
    if best.1 == best.0 {
        return Err(Error::NoSlaterPoint(
            "no strictly feasible point between the set points and the comfort bound".into(),
        ));
    }
    let bisect = |mut bad: f64, mut good: f64| {
        for _ in 0..50 {
            let mid = 0.5 * (bad + good);
            if ok(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    let lo = if best.0 == 0 { 0.0 } else { bisect(thetas[best.0 - 1], thetas[best.0]) };
    let hi = if best.1 == flags.len() {
        END
    } else {
        bisect(thetas[best.1], thetas[best.1 - 1])
    };
    let theta = if lo == 0.0 { 0.0 } else { 0.5 * (lo + hi) };
    feasible(&at(theta))
        .or_else(|| feasible(&at(thetas[(best.0 + best.1 - 1) / 2])))
        .ok_or_else(|| Error::NoSlaterPoint("interior probe lost feasibility".into()))
}

/// One point of a comfort/energy tradeoff curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub weight: f64,
    /// `½ Σ r (Z - T^set)²`
    pub comfort: f64,
    /// Energy term of the solved problem (its own fan model).
    pub energy: f64,
    pub objective_full: f64,
    pub total_flow: f64,
    pub pt: DecisionPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradeoffProblem {
    Relaxed,
    General,
}

/// Solves the instance for each energy weight.
pub fn tradeoff_sweep(inst: &ProblemInstance, weights: &[f64], problem: TradeoffProblem) -> Result<Vec<TradeoffPoint>> {
    weights
        .iter()
        .map(|&w| {
            let mut ctx = inst.ctx().clone();
            ctx.energy_weight = w;
            let inst = inst.with_context(ctx)?;
            let (res, energy) = match problem {
                TradeoffProblem::Relaxed => {
                    let r = solve_relaxed(&inst)?;
                    let e = energy_cost_approx(&inst, &r.pt)?;
                    (r, e)
                }
                TradeoffProblem::General => {
                    let r = solve_general(&inst)?;
                    let e = energy_cost_general(&inst, &r.pt.z)?;
                    (r, e)
                }
            };
            Ok(TradeoffPoint {
                weight: w,
                comfort: comfort_cost(&inst, &res.pt.z)?,
                energy,
                objective_full: objective_full(&inst, &res.pt)?,
                total_flow: res.pt.m.iter().sum(),
                pt: res.pt,
            })
        })
        .collect()
}
