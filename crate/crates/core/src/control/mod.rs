//! Optimal predator release.
//!
//! The control `u(t)` is a release rate added to the predator equation of the
//! rescaled model. The objective is reported in minimisation form,
//! `J(u) = ∫ (c u² + q u + r I_h) dt - a S_h(T)`; the Pontryagin conditions
//! are written for the equivalent maximisation of `-J` with multiplier one.

mod gradient;
mod objective;
mod pmp;
mod sweep;

pub use gradient::{gradient_check, Bump, GradientReport};
pub use objective::objective;
pub use pmp::{adjoint_field, adjoint_rhs, hamiltonian, optimal_u, optimal_u_with_tie, SINGULAR_TIE};
pub use sweep::{backward_adjoint, forward_state, sweep_solve, SweepOptions, SweepResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Scales;

/// Weights of the objective, the control bound and the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    /// Quadratic control cost.
    pub c: f64,
    /// Linear control cost.
    pub q: f64,
    /// Weight of infected hosts.
    pub r: f64,
    /// Terminal reward per susceptible host.
    pub a: f64,
    pub u_max: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c", self.c), ("q", self.q), ("r", self.r), ("a", self.a)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!("weight {name} must be finite and nonnegative, got {v}")));
            }
        }
        if self.c == 0.0 && self.q == 0.0 {
            return Err(Error::domain("weights c and q cannot both be zero"));
        }
        if !(self.u_max.is_finite() && self.u_max > 0.0) {
            return Err(Error::domain("u_max must be positive"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::domain("horizon T must be positive"));
        }
        Ok(())
    }

    /// Rewrites weights given in physical units (days, hosts, predators per
    /// day) for the rescaled system, so that the rescaled objective equals
    /// the dimensional one.
    pub fn to_dimensionless(&self, s: &Scales) -> CostWeights {
        let k = s.control_scale();
        CostWeights {
            c: self.c * k * k / s.mu_v,
            q: self.q * k / s.mu_v,
            r: self.r * s.host_total / s.mu_v,
            a: self.a * s.host_total,
            u_max: self.u_max / k,
            horizon: s.time_to_dimensionless(self.horizon),
        }
    }
}

/// Control on a uniform grid over `[0, T]`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    horizon: f64,
    u_max: f64,
    values: Vec<f64>,
}

impl ControlSignal {
    pub fn new(horizon: f64, values: Vec<f64>, u_max: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::domain("a control needs at least two grid nodes"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::domain("control horizon must be positive"));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v <= u_max)) {
            return Err(Error::domain(format!("control value {v} outside [0, {u_max}]")));
        }
        Ok(Self { horizon, u_max, values })
    }

    pub fn constant(horizon: f64, intervals: usize, value: f64, u_max: f64) -> Result<Self> {
        Self::new(horizon, vec![value; intervals + 1], u_max)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.horizon / self.intervals() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.intervals() as f64;
        (0..self.values.len()).map(|i| self.horizon * (i as f64 / n)).collect()
    }

    /// Interpolated value; times outside `[0, T]` are clamped.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.intervals();
        let x = (t / self.horizon * n as f64).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        let theta = x - i as f64;
        self.values[i] + theta * (self.values[i + 1] - self.values[i])
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: self.horizon });
        }
        Ok(self.eval(t))
    }
}

/// Costates paired with `(S_h, I_h, S_v, I_v, D)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdjointState {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub p5: f64,
}

impl AdjointState {
    pub fn to_array(&self) -> [f64; 5] {
        [self.p1, self.p2, self.p3, self.p4, self.p5]
    }

    pub fn from_array(p: [f64; 5]) -> Self {
        let [p1, p2, p3, p4, p5] = p;
        Self { p1, p2, p3, p4, p5 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights() -> CostWeights {
        CostWeights { c: 1.0, q: 1.0, r: 5.0, a: 5.0, u_max: 0.5, horizon: 30.0 }
    }

    #[test]
    fn weight_validation() {
        assert!(weights().validate().is_ok());
        assert!(CostWeights { c: 0.0, q: 0.0, ..weights() }.validate().is_err());
        assert!(CostWeights { r: -1.0, ..weights() }.validate().is_err());
        assert!(CostWeights { u_max: 0.0, ..weights() }.validate().is_err());
        assert!(CostWeights { horizon: 0.0, ..weights() }.validate().is_err());
    }

    #[test]
    fn control_grid_and_interpolation() {
        let u = ControlSignal::new(2.0, vec![0.0, 1.0, 0.5], 1.0).unwrap();
        assert_eq!(u.times(), vec![0.0, 1.0, 2.0]);
        assert_eq!(u.eval(0.5), 0.5);
        assert_eq!(u.eval(1.5), 0.75);
        assert_eq!(u.eval(2.0), 0.5);
        assert_eq!(u.eval(-1.0), 0.0);
        assert!(u.value_at(2.5).is_err());
    }

    #[test]
    fn control_bounds_enforced() {
        assert!(ControlSignal::new(1.0, vec![0.0, 0.6], 0.5).is_err());
        assert!(ControlSignal::new(1.0, vec![-1e-9, 0.1], 0.5).is_err());
        assert!(ControlSignal::new(1.0, vec![0.1], 0.5).is_err());
        assert!(ControlSignal::new(1.0, vec![0.1, f64::NAN], 0.5).is_err());
    }

    #[test]
    fn grid_ends_exactly_at_horizon() {
        let u = ControlSignal::constant(1.5, 2000, 0.0, 1.0).unwrap();
        assert_eq!(*u.times().last().unwrap(), 1.5);
    }
}
