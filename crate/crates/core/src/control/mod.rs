//! Distributed primal-dual controllers.
//!
//! Both methods only see what a zone can measure: its own temperature (and
//! a filtered derivative of it), its own commanded flow, neighbor messages
//! and the fan broadcast. Outdoor temperature and heat gains never enter a
//! controller; they are reconstructed from the zone balance.

mod method1;
mod method2;

pub use method1::{fan_step_m1, zone_step_m1, zone_step_m1_with, LoadSource, M1FanState, M1ZoneState};
pub use method2::{
    fan_step_m2, zone_step_m2, FanBroadcast, FlowReport, M2FanState, M2ZoneState, NeighborMsg,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Controller gains, per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainSet {
    pub k_z: f64,
    pub k_m: f64,
    pub k_zeta: f64,
    pub k_nu_up: f64,
    pub k_nu_lo: f64,
    pub k_mu_up: f64,
    pub k_mu_lo: f64,
    pub k_lambda: f64,
}

impl Default for GainSet {
    fn default() -> Self {
        Self {
            k_z: 0.067,
            k_m: 1.0,
            k_zeta: 1.0,
            k_nu_up: 1.0,
            k_nu_lo: 1.0,
            k_mu_up: 1.0,
            k_mu_lo: 1.0,
            k_lambda: 1.0,
        }
    }
}

impl GainSet {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("k_z", self.k_z),
            ("k_m", self.k_m),
            ("k_zeta", self.k_zeta),
            ("k_nu_up", self.k_nu_up),
            ("k_nu_lo", self.k_nu_lo),
            ("k_mu_up", self.k_mu_up),
            ("k_mu_lo", self.k_mu_lo),
            ("k_lambda", self.k_lambda),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("gains.{name}"), format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// `(value)⁺_x`: the rate itself when `x > 0`, otherwise only its positive
/// part.
pub fn pos_project(value: f64, x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeMultiplier {
            name: "projected state",
            zone: 0,
            value: x,
        });
    }
    Ok(if x > 0.0 { value } else { value.max(0.0) })
}

/// Euler step of a multiplier under positive projection, clipped at zero
/// so a finite step cannot overshoot into negative values.
pub(crate) fn dual_step(x: f64, rate: f64, dt: f64) -> Result<f64> {
    Ok((x + dt * pos_project(rate, x)?).max(0.0))
}

/// First-order filtered differentiator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirtyDerivative {
    tau: f64,
    internal: f64,
    output: f64,
}

impl DirtyDerivative {
    pub fn new(tau: f64, initial: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::param("derivative_tau", format!("must be > 0, got {tau}")));
        }
        Ok(Self {
            tau,
            internal: initial,
            output: 0.0,
        })
    }

    /// Feeds one sample and returns the derivative estimate.
    pub fn update(&mut self, sample: f64, dt: f64) -> f64 {
        self.output = (sample - self.internal) / self.tau;
        self.internal += dt * self.output;
        self.output
    }

    pub fn output(&self) -> f64 {
        self.output
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Euler step of `ṁ = k_m (target - m)`.
pub fn low_pass_flow(m: f64, target: f64, k_m: f64, dt: f64) -> f64 {
    m + dt * k_m * (target - m)
}

/// What the damper actually delivers for a commanded flow.
pub fn applied_flow(command: f64, flow_max: f64) -> f64 {
    command.clamp(0.0, flow_max)
}

pub(crate) fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        assert_eq!(pos_project(-1.0, 0.0).unwrap(), 0.0);
        assert_eq!(pos_project(-1.0, 0.5).unwrap(), -1.0);
        assert_eq!(pos_project(2.0, 0.0).unwrap(), 2.0);
        assert!(pos_project(1.0, -1e-12).is_err());
    }

    #[test]
    fn dirty_derivative_responses() {
        let dt = 0.1;
        let mut d = DirtyDerivative::new(10.0, 5.0).unwrap();
        let mut out = 0.0;
        for _ in 0..2000 {
            out = d.update(5.0, dt);
        }
        assert_eq!(out, 0.0);

        // Step: decays exponentially.
        let mut d = DirtyDerivative::new(10.0, 0.0).unwrap();
        let first = d.update(1.0, dt);
        for _ in 0..1000 {
            d.update(1.0, dt);
        }
        assert!(d.output().abs() < first * 1e-4);

        // Ramp of slope a: within 1 % after 5 τ.
        let a = 0.02;
        let mut d = DirtyDerivative::new(10.0, 0.0).unwrap();
        let steps = (50.0 / dt) as usize;
        for k in 1..=steps {
            out = d.update(a * k as f64 * dt, dt);
        }
        assert!((out - a).abs() < 0.01 * a, "{out}");
        assert!(DirtyDerivative::new(0.0, 0.0).is_err());
    }

    #[test]
    fn low_pass_examples() {
        assert_eq!(low_pass_flow(0.2, 0.2, 1.0, 0.1), 0.2);
        // 99 % of a unit step after about 4.6 / k_m seconds.
        let (k, dt) = (1.0, 0.001);
        let mut m = 0.0;
        let mut t = 0.0;
        while m < 0.99 {
            m = low_pass_flow(m, 1.0, k, dt);
            t += dt;
        }
        assert!((t - 4.6).abs() < 0.02, "{t}");
    }

    #[test]
    fn low_pass_attenuates_fast_noise() {
        // 10 Hz square-ish noise, amplitude 1, k_m = 1.
        let dt = 0.001;
        let mut m = 0.0;
        let mut peak: f64 = 0.0;
        for k in 0..20_000 {
            let t = k as f64 * dt;
            let noise = (2.0 * std::f64::consts::PI * 10.0 * t).sin();
            m = low_pass_flow(m, noise, 1.0, dt);
            if t > 10.0 {
                peak = peak.max(m.abs());
            }
        }
        assert!(peak < 1.0 / 30.0, "{peak}");
    }

    #[test]
    fn gains_validate() {
        assert!(GainSet::default().validate().is_ok());
        let g = GainSet {
            k_mu_lo: 0.0,
            ..GainSet::default()
        };
        assert!(g.validate().is_err());
    }

    proptest! {
        #[test]
        fn dual_step_never_negative(x in 0.0f64..10.0, rate in -1e6f64..1e6, dt in 1e-4f64..10.0) {
            prop_assert!(dual_step(x, rate, dt).unwrap() >= 0.0);
        }
    }
}
