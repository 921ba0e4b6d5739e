//! Brute-force scans for two-zone instances.

use crate::error::{Error, Result};
use crate::problems::{
    coupled_flows, feasibility_check, flow_for_temp, objective_approx, objective_full, DecisionPoint, ProblemInstance,
    ProblemKind,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub pt: DecisionPoint,
    pub objective: f64,
    /// Grid spacing per axis at the finest level.
    pub spacing: [f64; 2],
    pub feasible_points: usize,
}

fn check(inst: &ProblemInstance, resolution: usize) -> Result<()> {
    if inst.len() != 2 {
        return Err(Error::Dimension {
            name: "zones",
            expected: 2,
            actual: inst.len(),
        });
    }
    if resolution < 3 {
        return Err(Error::param("resolution", "need at least 3 points per axis"));
    }
    Ok(())
}

// Grid samples are exact, so only round-off is forgiven. Accepting points
// within PRIMAL_TOL would let the scan drift outward along a binding cap.
const GRID_FEAS_TOL: f64 = 1e-12;

fn axis(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|j| lo + (hi - lo) * j as f64 / (k - 1) as f64).collect()
}

// Flows implied by temperatures for the given problem, with its objective.
fn evaluate(inst: &ProblemInstance, z: [f64; 2], kind: ProblemKind) -> Result<Option<(DecisionPoint, f64)>> {
    let z = z.to_vec();
    let (m, full) = match kind {
        ProblemKind::Relaxed => {
            // Energy is increasing in m, so the cheapest admissible flow wins.
            let m = (0..2)
                .map(|i| Ok(flow_for_temp(inst, i, z[i])?.max(inst.net().zone(i).flow_min)))
                .collect::<Result<Vec<_>>>()?;
            (m, false)
        }
        ProblemKind::Approx => ((0..2).map(|i| flow_for_temp(inst, i, z[i])).collect::<Result<_>>()?, false),
        ProblemKind::Full | ProblemKind::General => (coupled_flows(inst, &z)?, true),
    };
    let pt = DecisionPoint { z, m };
    let feas_kind = if full { ProblemKind::Full } else { kind };
    if feasibility_check(inst, &pt, feas_kind)?.max_violation > GRID_FEAS_TOL {
        return Ok(None);
    }
    let obj = if full { objective_full(inst, &pt)? } else { objective_approx(inst, &pt)? };
    Ok(Some((pt, obj)))
}

fn scan(
    inst: &ProblemInstance,
    bounds: [(f64, f64); 2],
    resolution: usize,
    kind: ProblemKind,
) -> Result<Option<GridResult>> {
    let a = axis(bounds[0].0, bounds[0].1, resolution);
    let b = axis(bounds[1].0, bounds[1].1, resolution);
    let mut best: Option<(DecisionPoint, f64)> = None;
    let mut count = 0;
    for &z1 in &a {
        for &z2 in &b {
            if let Some((pt, obj)) = evaluate(inst, [z1, z2], kind)? {
                count += 1;
                if best.as_ref().is_none_or(|(_, o)| obj < *o) {
                    best = Some((pt, obj));
                }
            }
        }
    }
    let spacing = [
        (bounds[0].1 - bounds[0].0) / (resolution - 1) as f64,
        (bounds[1].1 - bounds[1].0) / (resolution - 1) as f64,
    ];
    Ok(best.map(|(pt, objective)| GridResult {
        pt,
        objective,
        spacing,
        feasible_points: count,
    }))
}

/// Exhaustive scan of the comfort box with `resolution` points per axis.
/// Flows follow from the temperatures (decoupled for the separable
/// problems, coupled otherwise); infeasible points are discarded.
pub fn grid_search_2zone(inst: &ProblemInstance, resolution: usize, kind: ProblemKind) -> Result<GridResult> {
    grid_search_2zone_refined(inst, resolution, kind, 0)
}

/// As [`grid_search_2zone`], then `levels` times rescans a window of ±20
/// cells around the incumbent at the same resolution, a zoom of
/// `(resolution - 1) / 40` per level (tenfold at 400). A level is recentred while the incumbent sits on an interior edge
/// of its window, which happens when a binding constraint is curved.
pub fn grid_search_2zone_refined(
    inst: &ProblemInstance,
    resolution: usize,
    kind: ProblemKind,
    levels: usize,
) -> Result<GridResult> {
    check(inst, resolution)?;
    let comfort = |i: usize| {
        let p = inst.net().zone(i);
        (p.comfort_min, p.comfort_max)
    };
    let bounds = [comfort(0), comfort(1)];
    let mut best = scan(inst, bounds, resolution, kind)?
        .ok_or_else(|| Error::NoFeasiblePoint(format!("{resolution}x{resolution} grid over the comfort box")))?;
    for _ in 0..levels {
        let half = [20.0 * best.spacing[0], 20.0 * best.spacing[1]];
        for _ in 0..20 {
            let window = |i: usize| {
                let (lo, hi) = comfort(i);
                ((best.pt.z[i] - half[i]).max(lo), (best.pt.z[i] + half[i]).min(hi))
            };
            let bounds = [window(0), window(1)];
            let Some(r) = scan(inst, bounds, resolution, kind)? else {
                break;
            };
            let spacing = r.spacing;
            if r.objective <= best.objective {
                best = r;
            }
            best.spacing = spacing;
            let on_edge = (0..2).any(|i| {
                let (lo, hi) = comfort(i);
                let z = best.pt.z[i];
                (z - bounds[i].0 < 1.5 * spacing[i] && bounds[i].0 > lo)
                    || (bounds[i].1 - z < 1.5 * spacing[i] && bounds[i].1 < hi)
            });
            if !on_edge {
                break;
            }
        }
    }
    Ok(best)
}

/// Feasible temperature pairs of the coupled problem without comfort bounds,
/// under flow cap `cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleMask {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    /// `cells[a][b]` is `(z1[a], z2[b])`.
    pub cells: Vec<Vec<bool>>,
}

impl FeasibleMask {
    pub fn count(&self) -> usize {
        self.cells.iter().flatten().filter(|&&c| c).count()
    }

    /// True if every feasible cell here is also feasible in `other`.
    pub fn is_subset_of(&self, other: &FeasibleMask) -> bool {
        self.cells
            .iter()
            .flatten()
            .zip(other.cells.iter().flatten())
            .all(|(&a, &b)| !a || b)
    }

    /// Row and column sections are intervals, a grid proxy for convexity.
    pub fn sections_are_intervals(&self) -> bool {
        let interval = |v: &mut dyn Iterator<Item = bool>| {
            let flags: Vec<bool> = v.collect();
            let first = flags.iter().position(|&f| f);
            let last = flags.iter().rposition(|&f| f);
            match (first, last) {
                (Some(a), Some(b)) => flags[a..=b].iter().all(|&f| f),
                _ => true,
            }
        };
        let rows = self.cells.iter().all(|r| interval(&mut r.iter().copied()));
        let cols = (0..self.z2.len()).all(|b| interval(&mut self.cells.iter().map(|r| r[b])));
        rows && cols
    }
}

pub fn feasible_mask_2zone(
    inst: &ProblemInstance,
    range: (f64, f64),
    resolution: usize,
    cap: f64,
) -> Result<FeasibleMask> {
    check(inst, resolution)?;
    let z1 = axis(range.0, range.1, resolution);
    let z2 = z1.clone();
    let mut cells = vec![vec![false; resolution]; resolution];
    for (a, &x) in z1.iter().enumerate() {
        for (b, &y) in z2.iter().enumerate() {
            let m = coupled_flows(inst, &[x, y])?;
            cells[a][b] = (0..2).all(|i| {
                let p = inst.net().zone(i);
                m[i] >= p.flow_min && m[i] <= p.flow_max
            }) && m[0] + m[1] <= cap;
        }
    }
    Ok(FeasibleMask { z1, z2, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::{AmbientSample, BuildingNetwork, Edge, Mode, OperatingContext, ZoneParams};

    fn inst(w: f64) -> ProblemInstance {
        let zone = |r: f64, sp: f64| ZoneParams {
            capacitance: 20.0,
            resistance_out: r,
            set_point: sp,
            comfort_min: sp - 2.0,
            comfort_max: sp + 2.0,
            flow_min: 0.01,
            flow_max: 0.5,
            weight: 0.1,
            supply_temp_override: None,
        };
        let net = BuildingNetwork::new(
            vec![zone(15.0, 22.0), zone(16.0, 22.5)],
            vec![Edge { a: 0, b: 1, resistance: 18.0 }],
        )
        .unwrap();
        let ctx = OperatingContext {
            mode: Mode::Cooling,
            supply_temp: 12.8,
            specific_heat: 1.012,
            cop: 2.9,
            fan_coeff: 2.0,
            fan_bound: 1.0,
            energy_weight: w,
            total_flow_cap: 0.7,
        };
        ProblemInstance::new(net, ctx, AmbientSample::new(30.0, vec![0.1, 0.2]).unwrap()).unwrap()
    }

    #[test]
    fn comfort_only_objective_picks_nearest_grid_point() {
        // Axes run 20..24 and 20.5..24.5 in steps of 0.5: set points are on grid.
        let r = grid_search_2zone(&inst(0.0), 9, ProblemKind::General).unwrap();
        assert!((r.pt.z[0] - 22.0).abs() < 1e-12 && (r.pt.z[1] - 22.5).abs() < 1e-12);
        assert_eq!(r.objective, 0.0);
        assert!(grid_search_2zone(&inst(0.0), 2, ProblemKind::General).is_err());
    }

    #[test]
    fn refinement_stays_within_spacing_bound() {
        let coarse = grid_search_2zone(&inst(1.0), 100, ProblemKind::General).unwrap();
        let fine = grid_search_2zone(&inst(1.0), 400, ProblemKind::General).unwrap();
        for i in 0..2 {
            assert!((coarse.pt.z[i] - fine.pt.z[i]).abs() <= coarse.spacing[i] + fine.spacing[i]);
        }
        let refined = grid_search_2zone_refined(&inst(1.0), 100, ProblemKind::General, 6).unwrap();
        assert!(refined.objective <= fine.objective + 1e-12);
        assert!(refined.spacing[0] < 1e-3);
    }

    #[test]
    fn feasible_sets_nest_as_the_cap_tightens() {
        let i = inst(1.0);
        let masks: Vec<FeasibleMask> = [0.7, 0.5, 0.3]
            .iter()
            .map(|&cap| feasible_mask_2zone(&i, (13.0, 32.0), 120, cap).unwrap())
            .collect();
        for m in &masks {
            assert!(m.count() > 0);
            assert!(m.sections_are_intervals());
        }
        assert!(masks[1].is_subset_of(&masks[0]) && masks[2].is_subset_of(&masks[1]));
        assert!(masks[2].count() < masks[1].count() && masks[1].count() < masks[0].count());
    }
}
