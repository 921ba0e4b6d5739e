use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::AmbientSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Hold,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub hour: f64,
    /// °C
    pub outdoor: f64,
    /// kW per zone
    pub gains: Vec<f64>,
}

/// Piecewise outdoor temperature and zone heat gain profiles.
///
/// Times are in hours; [`DisturbanceSchedule::sample`] takes seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSchedule {
    breakpoints: Vec<Breakpoint>,
    interpolation: Interpolation,
}

impl DisturbanceSchedule {
    pub fn new(breakpoints: Vec<Breakpoint>, interpolation: Interpolation) -> Result<Self> {
        let first = breakpoints
            .first()
            .ok_or_else(|| Error::Schedule("at least one breakpoint is required".into()))?;
        if first.hour != 0.0 {
            return Err(Error::Schedule(format!(
                "first breakpoint must be at hour 0, got {}",
                first.hour
            )));
        }
        let n = first.gains.len();
        for (k, b) in breakpoints.iter().enumerate() {
            if b.gains.len() != n {
                return Err(Error::Schedule(format!(
                    "breakpoint {k} has {} gains, expected {n}",
                    b.gains.len()
                )));
            }
            AmbientSample::new(b.outdoor, b.gains.clone())
                .map_err(|e| Error::Schedule(format!("breakpoint {k}: {e}")))?;
            if k > 0 && !(b.hour > breakpoints[k - 1].hour) {
                return Err(Error::Schedule(format!(
                    "breakpoint times must be strictly increasing (index {k})"
                )));
            }
        }
        Ok(Self {
            breakpoints,
            interpolation,
        })
    }

    pub fn constant(sample: &AmbientSample) -> Self {
        Self {
            breakpoints: vec![Breakpoint {
                hour: 0.0,
                outdoor: sample.outdoor,
                gains: sample.gains.clone(),
            }],
            interpolation: Interpolation::Hold,
        }
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn zone_count(&self) -> usize {
        self.breakpoints[0].gains.len()
    }

    /// Ambient at `t` seconds. Values before 0 use the first breakpoint, after
    /// the last they hold the last one.
    pub fn sample(&self, t: f64) -> AmbientSample {
        let hour = t / 3600.0;
        let idx = self.breakpoints.partition_point(|b| b.hour <= hour).max(1) - 1;
        let b = &self.breakpoints[idx];
        match (self.interpolation, self.breakpoints.get(idx + 1)) {
            (Interpolation::Linear, Some(next)) if hour > b.hour => {
                let a = (hour - b.hour) / (next.hour - b.hour);
                AmbientSample {
                    outdoor: b.outdoor + a * (next.outdoor - b.outdoor),
                    gains: b
                        .gains
                        .iter()
                        .zip(&next.gains)
                        .map(|(q0, q1)| q0 + a * (q1 - q0))
                        .collect(),
                }
            }
            _ => AmbientSample {
                outdoor: b.outdoor,
                gains: b.gains.clone(),
            },
        }
    }

    /// True when the ambient does not change anywhere in `[t0, t1)` (seconds).
    pub fn is_constant_on(&self, t0: f64, t1: f64) -> bool {
        let (h0, h1) = (t0 / 3600.0, t1 / 3600.0);
        let inside = |b: &Breakpoint| b.hour > h0 && b.hour < h1;
        match self.interpolation {
            Interpolation::Hold => !self.breakpoints.iter().any(inside),
            Interpolation::Linear => {
                let a = self.sample(t0);
                let moving = self.breakpoints.windows(2).any(|w| {
                    let overlaps = w[1].hour > h0 && w[0].hour < h1;
                    overlaps && (w[0].outdoor != w[1].outdoor || w[0].gains != w[1].gains)
                });
                !moving && self.sample(t1) == a
            }
        }
    }

    /// Breakpoint times after hour 0, in seconds.
    pub fn change_times(&self) -> Vec<f64> {
        self.breakpoints.iter().skip(1).map(|b| b.hour * 3600.0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bp(hour: f64, outdoor: f64) -> Breakpoint {
        Breakpoint {
            hour,
            outdoor,
            gains: vec![0.1, 0.2],
        }
    }

    #[test]
    fn hold_and_linear_sampling() {
        let s = DisturbanceSchedule::new(vec![bp(0.0, 28.0), bp(2.0, 32.0)], Interpolation::Hold).unwrap();
        assert_eq!(s.sample(3599.0).outdoor, 28.0);
        assert_eq!(s.sample(7200.0).outdoor, 32.0);
        assert_eq!(s.sample(1e6).outdoor, 32.0);
        let s = DisturbanceSchedule::new(vec![bp(0.0, 28.0), bp(2.0, 32.0)], Interpolation::Linear).unwrap();
        assert!((s.sample(3600.0).outdoor - 30.0).abs() < 1e-12);
        assert_eq!(s.sample(9000.0).outdoor, 32.0);
    }

    #[test]
    fn stationarity() {
        let s = DisturbanceSchedule::new(vec![bp(0.0, 28.0), bp(2.0, 32.0)], Interpolation::Hold).unwrap();
        assert!(s.is_constant_on(0.0, 7200.0));
        assert!(!s.is_constant_on(7000.0, 7300.0));
        assert!(s.is_constant_on(7200.0, 9000.0));
        let s = DisturbanceSchedule::new(vec![bp(0.0, 28.0), bp(2.0, 32.0), bp(3.0, 32.0)], Interpolation::Linear).unwrap();
        assert!(!s.is_constant_on(3600.0, 4000.0));
        assert!(s.is_constant_on(7300.0, 10000.0));
    }

    #[test]
    fn validation() {
        assert!(DisturbanceSchedule::new(vec![], Interpolation::Hold).is_err());
        assert!(DisturbanceSchedule::new(vec![bp(1.0, 28.0)], Interpolation::Hold).is_err());
        assert!(DisturbanceSchedule::new(vec![bp(0.0, 28.0), bp(0.0, 29.0)], Interpolation::Hold).is_err());
        let mut neg = bp(0.0, 28.0);
        neg.gains[0] = -0.1;
        assert!(DisturbanceSchedule::new(vec![neg], Interpolation::Hold).is_err());
    }
}
