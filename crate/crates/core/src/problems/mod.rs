//! Steady-state allocation problems: the coupled original, the decoupled
//! approximation, its convex relaxation, and the flow-eliminated
//! reformulation over temperatures only. Plus assumption validators and KKT
//! auditors used to certify equilibria.

mod checks;
mod functions;
mod kkt;
mod objective;

pub use checks::{
    assumption1_check, assumption3_check, comfort_box_samples, strict_convexity_bound, strict_convexity_check,
    Assumption3Report,
};
pub use functions::{coupled_flows, flow_curvature, flow_for_temp, flow_slope, h_gradient, h_hessian, h_of_z};
pub use kkt::{
    feasibility_check, kkt_residual_general, kkt_residual_relaxed, ConstraintSlack, FeasibilityReport, KktReport,
    ProblemKind, ZoneActivity,
};
pub use objective::{
    comfort_cost, energy_cost_approx, energy_cost_general, objective_approx, objective_full, objective_general,
};

use crate::error::{Error, Result};
use crate::thermal::{AmbientSample, BuildingNetwork, OperatingContext};

/// Primal feasibility tolerance, natural units.
pub const PRIMAL_TOL: f64 = 1e-6;
/// KKT residual pass threshold.
pub const KKT_TOL: f64 = 1e-5;
/// A flow-link multiplier above this counts as strictly positive.
pub const ZETA_TOL: f64 = 1e-6;

/// A network, its operating constants, and the disturbances frozen for a
/// steady-state problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    net: BuildingNetwork,
    ctx: OperatingContext,
    ambient: AmbientSample,
    signs: Vec<f64>,
    supply: Vec<f64>,
}

impl ProblemInstance {
    /// Validates the context against the network and resolves each zone's
    /// mode sign. Rejects zones whose flow map `f_i` would not be convex on
    /// the operating side of the supply temperature.
    pub fn new(net: BuildingNetwork, ctx: OperatingContext, ambient: AmbientSample) -> Result<Self> {
        ctx.validate(&net)?;
        if ambient.gains.len() != net.len() {
            return Err(Error::Dimension {
                name: "gains",
                expected: net.len(),
                actual: ambient.gains.len(),
            });
        }
        let mut signs = Vec::with_capacity(net.len());
        let mut supply = Vec::with_capacity(net.len());
        for (i, z) in net.zones().iter().enumerate() {
            let sigma = ctx.zone_sign(z, i)?;
            let ts = ctx.supply_temp_for(z);
            let k = (ts - ambient.outdoor) / z.resistance_out - ambient.gains[i];
            if sigma * k >= 0.0 {
                return Err(Error::Assumption {
                    name: "coil-convexity",
                    detail: format!(
                        "zone {i}: (T^s - T°)/R - Q = {k:.6} has the wrong sign for {} (flow map not convex)",
                        if sigma > 0.0 { "cooling" } else { "heating" }
                    ),
                });
            }
            signs.push(sigma);
            supply.push(ts);
        }
        Ok(Self {
            net,
            ctx,
            ambient,
            signs,
            supply,
        })
    }

    pub fn net(&self) -> &BuildingNetwork {
        &self.net
    }

    pub fn ctx(&self) -> &OperatingContext {
        &self.ctx
    }

    pub fn ambient(&self) -> &AmbientSample {
        &self.ambient
    }

    pub fn len(&self) -> usize {
        self.net.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net.is_empty()
    }

    /// +1 when zone `i` is cooled, -1 when heated.
    pub fn sign(&self, i: usize) -> f64 {
        self.signs[i]
    }

    pub fn supply(&self, i: usize) -> f64 {
        self.supply[i]
    }

    /// `T°/R_i + Q_i`, the exogenous heat driving zone `i` (kW).
    pub fn exogenous_load(&self, i: usize) -> f64 {
        self.ambient.outdoor / self.net.zone(i).resistance_out + self.ambient.gains[i]
    }

    pub fn uniform_mode(&self) -> bool {
        self.signs.windows(2).all(|w| w[0] == w[1])
    }

    pub fn with_ambient(&self, ambient: AmbientSample) -> Result<Self> {
        Self::new(self.net.clone(), self.ctx.clone(), ambient)
    }

    pub fn with_context(&self, ctx: OperatingContext) -> Result<Self> {
        Self::new(self.net.clone(), ctx, self.ambient.clone())
    }

    pub(crate) fn check_len(&self, name: &'static str, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Dimension {
                name,
                expected: self.len(),
                actual: len,
            });
        }
        Ok(())
    }

    pub(crate) fn offset(&self, i: usize, z: f64) -> Result<f64> {
        let d = z - self.supply[i];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::SupplyTemperature { zone: i, temp: z });
        }
        Ok(d)
    }
}

/// Steady-state temperatures `Z` and flows `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPoint {
    pub z: Vec<f64>,
    pub m: Vec<f64>,
}

/// Multipliers of the steady-state problems. `zeta` is empty for the
/// temperature-only reformulation.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    /// Flow-link constraint `f_i(Z_i) <= m_i`.
    pub zeta: Vec<f64>,
    /// `Z_i <= T_i^max`
    pub nu_up: Vec<f64>,
    /// `T_i^min <= Z_i`
    pub nu_lo: Vec<f64>,
    /// Upper flow limit.
    pub mu_up: Vec<f64>,
    /// Lower flow limit.
    pub mu_lo: Vec<f64>,
    /// Total flow cap.
    pub lambda: f64,
}

impl DualPoint {
    pub fn zeros(n: usize, with_zeta: bool) -> Self {
        Self {
            zeta: if with_zeta { vec![0.0; n] } else { Vec::new() },
            nu_up: vec![0.0; n],
            nu_lo: vec![0.0; n],
            mu_up: vec![0.0; n],
            mu_lo: vec![0.0; n],
            lambda: 0.0,
        }
    }

    pub(crate) fn check(&self, n: usize, with_zeta: bool) -> Result<()> {
        let groups: [(&'static str, &Vec<f64>); 5] = [
            ("zeta", &self.zeta),
            ("nu_up", &self.nu_up),
            ("nu_lo", &self.nu_lo),
            ("mu_up", &self.mu_up),
            ("mu_lo", &self.mu_lo),
        ];
        for (name, v) in groups {
            let expected = if name == "zeta" && !with_zeta { v.len() } else { n };
            if v.len() != expected {
                return Err(Error::Dimension {
                    name,
                    expected,
                    actual: v.len(),
                });
            }
            if let Some((zone, &value)) = v.iter().enumerate().find(|(_, x)| !(**x >= 0.0)) {
                return Err(Error::NegativeMultiplier { name, zone, value });
            }
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::NegativeMultiplier {
                name: "lambda",
                zone: 0,
                value: self.lambda,
            });
        }
        Ok(())
    }

    /// Largest absolute coordinate difference.
    pub fn max_gap(&self, other: &DualPoint) -> f64 {
        let pairs = [
            (&self.zeta, &other.zeta),
            (&self.nu_up, &other.nu_up),
            (&self.nu_lo, &other.nu_lo),
            (&self.mu_up, &other.mu_up),
            (&self.mu_lo, &other.mu_lo),
        ];
        pairs
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold((self.lambda - other.lambda).abs(), f64::max)
    }
}
