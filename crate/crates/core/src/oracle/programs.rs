//! The two steady-state problems written out for the barrier solver. Flow
//! maps and their derivatives are re-derived here (quotient rule on the zone
//! balance) rather than borrowed from the problem evaluators.

use nalgebra::{DMatrix, DVector};

use super::barrier::ConvexProgram;
use crate::problems::ProblemInstance;

pub(crate) struct Raw {
    pub n: usize,
    pub weight: Vec<f64>,
    pub set_point: Vec<f64>,
    pub t_min: Vec<f64>,
    pub t_max: Vec<f64>,
    pub m_min: Vec<f64>,
    pub m_max: Vec<f64>,
    pub r_out: Vec<f64>,
    /// `T°/R_i + Q_i`
    pub load: Vec<f64>,
    pub supply: Vec<f64>,
    pub sigma: Vec<f64>,
    pub nbrs: Vec<Vec<(usize, f64)>>,
    pub ca: f64,
    pub w: f64,
    pub cop: f64,
    pub fan: f64,
    pub phi: f64,
    pub cap: f64,
}

impl Raw {
    pub fn new(inst: &ProblemInstance) -> Self {
        let n = inst.len();
        let zones = inst.net().zones();
        let pick = |f: fn(&crate::thermal::ZoneParams) -> f64| zones.iter().map(f).collect::<Vec<_>>();
        let c = inst.ctx();
        Self {
            n,
            weight: pick(|z| z.weight),
            set_point: pick(|z| z.set_point),
            t_min: pick(|z| z.comfort_min),
            t_max: pick(|z| z.comfort_max),
            m_min: pick(|z| z.flow_min),
            m_max: pick(|z| z.flow_max),
            r_out: pick(|z| z.resistance_out),
            load: zones
                .iter()
                .zip(&inst.ambient().gains)
                .map(|(z, q)| inst.ambient().outdoor / z.resistance_out + q)
                .collect(),
            supply: (0..n).map(|i| inst.supply(i)).collect(),
            sigma: (0..n).map(|i| inst.sign(i)).collect(),
            nbrs: (0..n).map(|i| inst.net().neighbors(i).to_vec()).collect(),
            ca: c.specific_heat,
            w: c.energy_weight,
            cop: c.cop,
            fan: c.fan_coeff,
            phi: c.fan_bound,
            cap: c.total_flow_cap,
        }
    }

    /// Decoupled flow `num / (c_a d)` and its first two derivatives.
    pub fn flow(&self, i: usize, z: f64) -> (f64, f64, f64) {
        let d = z - self.supply[i];
        let num = self.load[i] - z / self.r_out[i];
        let dnum = -1.0 / self.r_out[i];
        let f = num / (self.ca * d);
        let f1 = (dnum * d - num) / (self.ca * d * d);
        // (dnum*d - num) has zero derivative in z.
        let f2 = -2.0 * (dnum * d - num) / (self.ca * d * d * d);
        (f, f1, f2)
    }

    /// Total conductance out of zone `i`.
    pub fn conductance(&self, i: usize) -> f64 {
        1.0 / self.r_out[i] + self.nbrs[i].iter().map(|&(_, r)| 1.0 / r).sum::<f64>()
    }

    /// Net zone load `N_i` with neighbors at `z`.
    pub fn net_load(&self, i: usize, z: &[f64]) -> f64 {
        self.load[i] - z[i] / self.r_out[i] + self.nbrs[i].iter().map(|&(j, r)| (z[j] - z[i]) / r).sum::<f64>()
    }

    /// `h`, its gradient and Hessian, summed zone by zone.
    pub fn total_flow(&self, z: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let mut h = 0.0;
        let mut g = DVector::zeros(n);
        let mut hs = DMatrix::zeros(n, n);
        for i in 0..n {
            let d = z[i] - self.supply[i];
            let num = self.net_load(i, z);
            h += num / (self.ca * d);
            let u = -self.conductance(i) * d - num;
            g[i] += u / (self.ca * d * d);
            hs[(i, i)] += -2.0 * u / (self.ca * d * d * d);
            for &(j, r) in &self.nbrs[i] {
                g[j] += 1.0 / (r * self.ca * d);
                let cross = -1.0 / (r * self.ca * d * d);
                hs[(i, j)] += cross;
                hs[(j, i)] += cross;
            }
        }
        (h, g, hs)
    }

    fn on_side(&self, z: &[f64]) -> bool {
        (0..self.n).all(|i| self.sigma[i] * (z[i] - self.supply[i]) > 0.0)
    }
}

/// Separable relaxed problem over `x = [Z; m]`. Per zone the constraints
/// are ordered flow link, `Z <= T^max`, `T^min <= Z`, `m <= m^max`,
/// `m^min <= m`; the total flow cap comes last.
pub(crate) struct Relaxed<'a>(pub &'a Raw);

impl ConvexProgram for Relaxed<'_> {
    fn dim(&self) -> usize {
        2 * self.0.n
    }

    fn n_constraints(&self) -> usize {
        5 * self.0.n + 1
    }

    fn objective(&self, x: &DVector<f64>) -> Option<f64> {
        let p = self.0;
        let z = &x.as_slice()[..p.n];
        if !p.on_side(z) {
            return None;
        }
        let v: f64 = (0..p.n)
            .map(|i| {
                let (zi, mi) = (x[i], x[p.n + i]);
                0.5 * p.weight[i] * (zi - p.set_point[i]).powi(2)
                    + p.sigma[i] * p.w / p.cop * p.ca * mi * (zi - p.supply[i])
                    + 0.5 * p.w * p.fan * p.phi * mi * mi
            })
            .sum();
        v.is_finite().then_some(v)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.0;
        let mut g = DVector::zeros(2 * p.n);
        for i in 0..p.n {
            let (zi, mi) = (x[i], x[p.n + i]);
            let k = p.sigma[i] * p.w / p.cop * p.ca;
            g[i] = p.weight[i] * (zi - p.set_point[i]) + k * mi;
            g[p.n + i] = k * (zi - p.supply[i]) + p.w * p.fan * p.phi * mi;
        }
        g
    }

    fn hessian(&self, _: &DVector<f64>) -> DMatrix<f64> {
        let p = self.0;
        let mut h = DMatrix::zeros(2 * p.n, 2 * p.n);
        for i in 0..p.n {
            let k = p.sigma[i] * p.w / p.cop * p.ca;
            h[(i, i)] = p.weight[i];
            h[(p.n + i, p.n + i)] = p.w * p.fan * p.phi;
            h[(i, p.n + i)] = k;
            h[(p.n + i, i)] = k;
        }
        h
    }

    fn constraint(&self, k: usize, x: &DVector<f64>) -> f64 {
        let p = self.0;
        if k == 5 * p.n {
            return x.rows(p.n, p.n).sum() - p.cap;
        }
        let i = k / 5;
        let (zi, mi) = (x[i], x[p.n + i]);
        match k % 5 {
            0 => p.flow(i, zi).0 - mi,
            1 => zi - p.t_max[i],
            2 => p.t_min[i] - zi,
            3 => mi - p.m_max[i],
            _ => p.m_min[i] - mi,
        }
    }

    fn constraint_grad(&self, k: usize, x: &DVector<f64>) -> DVector<f64> {
        let p = self.0;
        let mut g = DVector::zeros(2 * p.n);
        if k == 5 * p.n {
            g.rows_mut(p.n, p.n).fill(1.0);
            return g;
        }
        let i = k / 5;
        match k % 5 {
            0 => {
                g[i] = p.flow(i, x[i]).1;
                g[p.n + i] = -1.0;
            }
            1 => g[i] = 1.0,
            2 => g[i] = -1.0,
            3 => g[p.n + i] = 1.0,
            _ => g[p.n + i] = -1.0,
        }
        g
    }

    fn add_constraint_hess(&self, k: usize, x: &DVector<f64>, scale: f64, out: &mut DMatrix<f64>) {
        let p = self.0;
        if k < 5 * p.n && k.is_multiple_of(5) {
            let i = k / 5;
            out[(i, i)] += scale * p.flow(i, x[i]).2;
        }
    }
}

/// Temperature-only problem over `x = Z`. Per zone the constraints are
/// ordered `Z <= T^max`, `T^min <= Z`, upper flow, lower flow (both linear
/// after multiplying through by `c_a (Z - T^s)`); the cap on `h` comes last.
pub(crate) struct General<'a>(pub &'a Raw);

impl General<'_> {
    fn flow_row(&self, i: usize, bound: f64) -> DVector<f64> {
        // d/dZ of N_i - bound c_a (Z_i - T^s)
        let p = self.0;
        let mut g = DVector::zeros(p.n);
        g[i] = -p.conductance(i) - bound * p.ca;
        for &(j, r) in &p.nbrs[i] {
            g[j] += 1.0 / r;
        }
        g
    }
}

/// Phase I for a program: minimise `s` subject to `g_k(x) <= s`, over
/// `[x; s]`. A negative optimum yields a strictly feasible `x`.
pub(crate) struct PhaseOne<'a, P>(pub &'a P);

impl<P: ConvexProgram> PhaseOne<'_, P> {
    fn split(&self, x: &DVector<f64>) -> (DVector<f64>, f64) {
        let n = self.0.dim();
        (x.rows(0, n).into_owned(), x[n])
    }

    /// `[x0; max_k g_k(x0) + 1]`, a strictly feasible start.
    pub fn start(&self, x0: &DVector<f64>) -> DVector<f64> {
        let worst = (0..self.0.n_constraints())
            .map(|k| self.0.constraint(k, x0))
            .fold(f64::NEG_INFINITY, f64::max);
        let n = self.0.dim();
        let mut x = DVector::zeros(n + 1);
        x.rows_mut(0, n).copy_from(x0);
        x[n] = worst.max(0.0) + 1.0;
        x
    }
}

impl<P: ConvexProgram> ConvexProgram for PhaseOne<'_, P> {
    fn dim(&self) -> usize {
        self.0.dim() + 1
    }

    fn n_constraints(&self) -> usize {
        self.0.n_constraints()
    }

    fn objective(&self, x: &DVector<f64>) -> Option<f64> {
        let (inner, s) = self.split(x);
        // The inner objective doubles as the domain test.
        self.0.objective(&inner).map(|_| s)
    }

    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        g[self.0.dim()] = 1.0;
        g
    }

    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.dim(), self.dim())
    }

    fn constraint(&self, k: usize, x: &DVector<f64>) -> f64 {
        let (inner, s) = self.split(x);
        self.0.constraint(k, &inner) - s
    }

    fn constraint_grad(&self, k: usize, x: &DVector<f64>) -> DVector<f64> {
        let (inner, _) = self.split(x);
        let n = self.0.dim();
        let mut g = DVector::zeros(n + 1);
        g.rows_mut(0, n).copy_from(&self.0.constraint_grad(k, &inner));
        g[n] = -1.0;
        g
    }

    fn add_constraint_hess(&self, k: usize, x: &DVector<f64>, scale: f64, out: &mut DMatrix<f64>) {
        let (inner, _) = self.split(x);
        let n = self.0.dim();
        let mut block = DMatrix::zeros(n, n);
        self.0.add_constraint_hess(k, &inner, scale, &mut block);
        let mut view = out.view_mut((0, 0), (n, n));
        view += block;
    }
}

impl ConvexProgram for General<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }

    fn n_constraints(&self) -> usize {
        4 * self.0.n + 1
    }

    fn objective(&self, x: &DVector<f64>) -> Option<f64> {
        let p = self.0;
        let z = x.as_slice();
        if !p.on_side(z) {
            return None;
        }
        let (h, _, _) = p.total_flow(z);
        let v: f64 = (0..p.n)
            .map(|i| {
                0.5 * p.weight[i] * (z[i] - p.set_point[i]).powi(2)
                    + p.sigma[i] * p.w / p.cop * (p.load[i] - z[i] / p.r_out[i])
            })
            .sum::<f64>()
            + p.w * p.fan * h.powi(3);
        v.is_finite().then_some(v)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.0;
        let (h, dh, _) = p.total_flow(x.as_slice());
        let mut g = dh * (3.0 * p.w * p.fan * h * h);
        for i in 0..p.n {
            g[i] += p.weight[i] * (x[i] - p.set_point[i]) - p.sigma[i] * p.w / (p.cop * p.r_out[i]);
        }
        g
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let p = self.0;
        let (h, dh, hh) = p.total_flow(x.as_slice());
        let mut out = hh * (3.0 * p.w * p.fan * h * h) + (&dh * dh.transpose()) * (6.0 * p.w * p.fan * h);
        for i in 0..p.n {
            out[(i, i)] += p.weight[i];
        }
        out
    }

    fn constraint(&self, k: usize, x: &DVector<f64>) -> f64 {
        let p = self.0;
        let z = x.as_slice();
        if k == 4 * p.n {
            return p.total_flow(z).0 - p.cap;
        }
        let i = k / 4;
        let cd = p.ca * (z[i] - p.supply[i]);
        match k % 4 {
            0 => z[i] - p.t_max[i],
            1 => p.t_min[i] - z[i],
            2 => p.sigma[i] * (p.net_load(i, z) - p.m_max[i] * cd),
            _ => p.sigma[i] * (p.m_min[i] * cd - p.net_load(i, z)),
        }
    }

    fn constraint_grad(&self, k: usize, x: &DVector<f64>) -> DVector<f64> {
        let p = self.0;
        if k == 4 * p.n {
            return p.total_flow(x.as_slice()).1;
        }
        let i = k / 4;
        match k % 4 {
            0 => DVector::from_fn(p.n, |j, _| if j == i { 1.0 } else { 0.0 }),
            1 => DVector::from_fn(p.n, |j, _| if j == i { -1.0 } else { 0.0 }),
            2 => self.flow_row(i, p.m_max[i]) * p.sigma[i],
            _ => self.flow_row(i, p.m_min[i]) * -p.sigma[i],
        }
    }

    fn add_constraint_hess(&self, k: usize, x: &DVector<f64>, scale: f64, out: &mut DMatrix<f64>) {
        if k == 4 * self.0.n {
            *out += self.0.total_flow(x.as_slice()).2 * scale;
        }
    }
}
