//! Log-barrier interior point method with an active-set Newton polish.

use nalgebra::{DMatrix, DVector};

/// Smooth convex program `min f0(x) s.t. g_k(x) <= 0`.
pub(crate) trait ConvexProgram {
    fn dim(&self) -> usize;
    fn n_constraints(&self) -> usize;
    /// `None` outside the domain.
    fn objective(&self, x: &DVector<f64>) -> Option<f64>;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    fn constraint(&self, k: usize, x: &DVector<f64>) -> f64;
    fn constraint_grad(&self, k: usize, x: &DVector<f64>) -> DVector<f64>;
    /// Adds `scale * ∇²g_k(x)` into `out`; linear constraints leave it alone.
    fn add_constraint_hess(&self, k: usize, x: &DVector<f64>, scale: f64, out: &mut DMatrix<f64>);
}

pub(crate) struct Solution {
    pub x: DVector<f64>,
    pub y: Vec<f64>,
    pub iterations: usize,
    pub polished: bool,
}

pub(crate) const ITERATION_CAP: usize = 1_000_000;
const GAP: f64 = 1e-11;
const MU: f64 = 10.0;

fn barrier_value<P: ConvexProgram>(p: &P, t: f64, x: &DVector<f64>) -> Option<f64> {
    let mut v = t * p.objective(x)?;
    for k in 0..p.n_constraints() {
        let g = p.constraint(k, x);
        if !(g < 0.0) {
            return None;
        }
        v -= (-g).ln();
    }
    v.is_finite().then_some(v)
}

fn solve_sym(h: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    h.lu().solve(rhs)
}

/// Runs the barrier method from a strictly feasible `x0`.
pub(crate) fn solve<P: ConvexProgram>(p: &P, x0: DVector<f64>) -> Solution {
    let nc = p.n_constraints() as f64;
    let mut x = x0;
    let mut t = 1.0;
    let mut iterations = 0;
    loop {
        // Centering.
        for _ in 0..200 {
            if iterations >= ITERATION_CAP {
                break;
            }
            iterations += 1;
            let mut grad = p.gradient(&x) * t;
            let mut hess = p.hessian(&x) * t;
            for k in 0..p.n_constraints() {
                let g = p.constraint(k, &x);
                let dg = p.constraint_grad(k, &x);
                grad += &dg * (-1.0 / g);
                hess += (&dg * dg.transpose()) * (1.0 / (g * g));
                p.add_constraint_hess(k, &x, -1.0 / g, &mut hess);
            }
            let Some(step) = solve_sym(hess, &(-&grad)) else { break };
            let decrement = -grad.dot(&step);
            if decrement / 2.0 <= 1e-14 {
                break;
            }
            let f0 = barrier_value(p, t, &x).unwrap_or(f64::INFINITY);
            let mut s = 1.0;
            let mut moved = false;
            while s > 1e-16 {
                let cand = &x + &step * s;
                if let Some(f) = barrier_value(p, t, &cand) {
                    if f <= f0 - 0.25 * s * decrement {
                        x = cand;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if nc / t < GAP || iterations >= ITERATION_CAP {
            break;
        }
        t *= MU;
    }
    let y: Vec<f64> = (0..p.n_constraints()).map(|k| 1.0 / (t * -p.constraint(k, &x))).collect();
    match polish(p, &x, &y) {
        Some((xp, yp, it)) => Solution {
            x: xp,
            y: yp,
            iterations: iterations + it,
            polished: true,
        },
        None => Solution {
            x,
            y,
            iterations,
            polished: false,
        },
    }
}

/// Newton on the equality KKT system of the guessed active set. Returns
/// `None` when the guess does not yield a valid KKT point.
fn polish<P: ConvexProgram>(p: &P, x0: &DVector<f64>, y0: &[f64]) -> Option<(DVector<f64>, Vec<f64>, usize)> {
    let n = p.dim();
    let active: Vec<usize> = (0..p.n_constraints())
        .filter(|&k| y0[k] > -p.constraint(k, x0))
        .collect();
    let na = active.len();
    let mut x = x0.clone();
    let mut ya: Vec<f64> = active.iter().map(|&k| y0[k]).collect();
    let mut converged = false;
    let mut it = 0;
    for _ in 0..30 {
        it += 1;
        let mut r = DVector::zeros(n + na);
        let mut jac = DMatrix::zeros(n + na, n + na);
        let mut lag_hess = p.hessian(&x);
        let mut lag_grad = p.gradient(&x);
        for (a, &k) in active.iter().enumerate() {
            let dg = p.constraint_grad(k, &x);
            lag_grad += &dg * ya[a];
            p.add_constraint_hess(k, &x, ya[a], &mut lag_hess);
            r[n + a] = p.constraint(k, &x);
            for j in 0..n {
                jac[(n + a, j)] = dg[j];
                jac[(j, n + a)] = dg[j];
            }
        }
        r.rows_mut(0, n).copy_from(&lag_grad);
        jac.view_mut((0, 0), (n, n)).copy_from(&lag_hess);
        if r.amax() < 1e-13 {
            converged = true;
            break;
        }
        let step = jac.lu().solve(&(-&r))?;
        x += step.rows(0, n);
        for a in 0..na {
            ya[a] += step[n + a];
        }
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    if !converged || ya.iter().any(|&v| v < 0.0) {
        return None;
    }
    p.objective(&x)?;
    let mut y = vec![0.0; p.n_constraints()];
    for (a, &k) in active.iter().enumerate() {
        y[k] = ya[a];
    }
    for k in 0..p.n_constraints() {
        if !active.contains(&k) && !(p.constraint(k, &x) < 0.0) {
            return None;
        }
    }
    Some((x, y, it))
}
