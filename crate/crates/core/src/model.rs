//! Parameter and state types, the right-hand sides of every model variant,
//! and the rescaling that links the dimensional and dimensionless forms.
//!
//! State vectors are always stored in the order `(S_h, I_h, S_v, I_v, D)`.
//! The full dimensional model additionally carries `R_h`, stored as
//! `(S_h, I_h, R_h, S_v, I_v, D)`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub const S_H: usize = 0;
pub const I_H: usize = 1;
pub const S_V: usize = 2;
pub const I_V: usize = 3;
pub const PRED: usize = 4;

/// Rates of the model in physical units (per day, per host, per vector).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionalParams {
    /// Host birth and death rate.
    pub mu_h: f64,
    /// Vector birth rate.
    pub mu_v: f64,
    /// Predator death rate.
    #[serde(rename = "mu_D")]
    pub mu_d: f64,
    /// Host recovery rate.
    pub gamma: f64,
    /// Predation rate per predator.
    pub alpha: f64,
    /// Conversion efficiency of eaten vectors into predators.
    pub eta: f64,
    /// Bite rate.
    #[serde(rename = "b")]
    pub bite_rate: f64,
    pub beta_h: f64,
    pub beta_v: f64,
    /// Total host population.
    #[serde(rename = "N_h")]
    pub n_h: f64,
}

impl DimensionalParams {
    /// Reference parameter set of the numerical experiments, with the host
    /// total fixed by the initial condition `S_h + I_h = 10`.
    pub fn table1() -> Self {
        Self {
            mu_h: 3.4e-5,
            mu_v: 0.0125,
            mu_d: 0.15,
            gamma: 0.14,
            alpha: 0.3,
            eta: 0.1,
            bite_rate: 0.7,
            beta_h: 0.45,
            beta_v: 0.55,
            n_h: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu_h", self.mu_h),
            ("mu_v", self.mu_v),
            ("mu_D", self.mu_d),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("eta", self.eta),
            ("b", self.bite_rate),
            ("beta_h", self.beta_h),
            ("beta_v", self.beta_v),
            ("N_h", self.n_h),
        ];
        check_positive(&fields)
    }

    fn host_force(&self) -> f64 {
        self.bite_rate * self.beta_h / self.n_h
    }

    fn vector_force(&self) -> f64 {
        self.bite_rate * self.beta_v / self.n_h
    }

    /// Full model in `(S_h, I_h, R_h, S_v, I_v, D)` order.
    pub fn full_field(&self, y: &[f64; 6]) -> [f64; 6] {
        let [s_h, i_h, r_h, s_v, i_v, d] = *y;
        let host_inc = self.host_force() * s_h * i_v;
        let vec_inc = self.vector_force() * s_v * i_h;
        [
            self.mu_h * self.n_h - host_inc - self.mu_h * s_h,
            host_inc - (self.gamma + self.mu_h) * i_h,
            self.gamma * i_h - self.mu_h * r_h,
            self.mu_v * (s_v + i_v) - vec_inc - self.alpha * d * s_v,
            vec_inc - self.alpha * d * i_v,
            self.eta * (s_v + i_v) * d - self.mu_d * d,
        ]
    }

    /// Reduced model (recovered hosts eliminated) with a predator release
    /// rate `u` in predators per day.
    pub fn reduced_field(&self, y: &[f64; 5], u: f64) -> [f64; 5] {
        let [s_h, i_h, s_v, i_v, d] = *y;
        let host_inc = self.host_force() * s_h * i_v;
        let vec_inc = self.vector_force() * s_v * i_h;
        [
            self.mu_h * self.n_h - host_inc - self.mu_h * s_h,
            host_inc - (self.gamma + self.mu_h) * i_h,
            self.mu_v * (s_v + i_v) - vec_inc - self.alpha * d * s_v,
            vec_inc - self.alpha * d * i_v,
            self.eta * (s_v + i_v) * d - self.mu_d * d + u,
        ]
    }
}

/// Parameters of the rescaled model. All are pure numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionlessParams {
    #[serde(rename = "B_h")]
    pub b_h: f64,
    #[serde(rename = "B_v")]
    pub b_v: f64,
    pub mu_h: f64,
    pub gamma: f64,
    #[serde(rename = "mu_D")]
    pub mu_d: f64,
}

impl DimensionlessParams {
    pub fn validate(&self) -> Result<()> {
        check_positive(&[
            ("B_h", self.b_h),
            ("B_v", self.b_v),
            ("mu_h", self.mu_h),
            ("gamma", self.gamma),
            ("mu_D", self.mu_d),
        ])
    }

    /// Host removal rate `gamma + mu_h`.
    pub fn removal(&self) -> f64 {
        self.gamma + self.mu_h
    }

    /// Rescaled model with predator release `u`; `u = 0` is the free system.
    pub fn vector_field(&self, y: &[f64; 5], u: f64) -> [f64; 5] {
        let [s_h, i_h, s_v, i_v, d] = *y;
        let host_inc = self.b_h * s_h * i_v;
        let vec_inc = self.b_v * s_v * i_h;
        [
            self.mu_h * (1.0 - s_h) - host_inc,
            host_inc - self.removal() * i_h,
            (s_v + i_v) - vec_inc - d * s_v,
            vec_inc - d * i_v,
            (s_v + i_v - 1.0) * self.mu_d * d + u,
        ]
    }

    /// Aggregated vector / predator subsystem.
    pub fn lv_field(&self, y: &[f64; 2]) -> [f64; 2] {
        let [n_v, d] = *y;
        [n_v * (1.0 - d), self.mu_d * d * (n_v - 1.0)]
    }
}

fn check_positive(fields: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in fields {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain(format!("parameter {name} must be positive and finite, got {v}")));
        }
    }
    Ok(())
}

/// Reduced five-compartment state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemState {
    #[serde(rename = "S_h")]
    pub s_h: f64,
    #[serde(rename = "I_h")]
    pub i_h: f64,
    #[serde(rename = "S_v")]
    pub s_v: f64,
    #[serde(rename = "I_v")]
    pub i_v: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

impl SystemState {
    pub const fn new(s_h: f64, i_h: f64, s_v: f64, i_v: f64, d: f64) -> Self {
        Self { s_h, i_h, s_v, i_v, d }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.s_h, self.i_h, self.s_v, self.i_v, self.d]
    }

    pub fn from_array(y: [f64; 5]) -> Self {
        let [s_h, i_h, s_v, i_v, d] = y;
        Self { s_h, i_h, s_v, i_v, d }
    }

    pub fn vectors(&self) -> f64 {
        self.s_v + self.i_v
    }

    /// Checks the state is usable as an initial condition.
    pub fn validate_nonnegative(&self) -> Result<()> {
        let y = self.to_array();
        ensure_finite(&y, "state")?;
        if y.iter().any(|&v| v < 0.0) {
            return Err(Error::domain("state components must be nonnegative"));
        }
        Ok(())
    }
}

/// Dimensional state including recovered hosts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullState {
    #[serde(rename = "S_h")]
    pub s_h: f64,
    #[serde(rename = "I_h")]
    pub i_h: f64,
    #[serde(rename = "R_h")]
    pub r_h: f64,
    #[serde(rename = "S_v")]
    pub s_v: f64,
    #[serde(rename = "I_v")]
    pub i_v: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

impl FullState {
    pub fn to_array(&self) -> [f64; 6] {
        [self.s_h, self.i_h, self.r_h, self.s_v, self.i_v, self.d]
    }

    pub fn from_array(y: [f64; 6]) -> Self {
        let [s_h, i_h, r_h, s_v, i_v, d] = y;
        Self { s_h, i_h, r_h, s_v, i_v, d }
    }

    pub fn reduced(&self) -> SystemState {
        SystemState::new(self.s_h, self.i_h, self.s_v, self.i_v, self.d)
    }

    pub fn hosts(&self) -> f64 {
        self.s_h + self.i_h + self.r_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LVState {
    pub n_v: f64,
    pub d: f64,
}

pub fn rhs_full(state: &FullState, params: &DimensionalParams) -> Result<FullState> {
    ensure_finite(&state.to_array(), "state")?;
    Ok(FullState::from_array(params.full_field(&state.to_array())))
}

pub fn rhs_reduced(state: &SystemState, params: &DimensionalParams) -> Result<SystemState> {
    ensure_finite(&state.to_array(), "state")?;
    Ok(SystemState::from_array(params.reduced_field(&state.to_array(), 0.0)))
}

pub fn rhs_dimensionless(state: &SystemState, params: &DimensionlessParams) -> Result<SystemState> {
    ensure_finite(&state.to_array(), "state")?;
    Ok(SystemState::from_array(params.vector_field(&state.to_array(), 0.0)))
}

/// Rescaled model with an additive predator source `u` in the `D` equation.
pub fn rhs_controlled(state: &SystemState, params: &DimensionlessParams, u: f64) -> Result<SystemState> {
    if !(u.is_finite() && u >= 0.0) {
        return Err(Error::domain(format!("control must be finite and nonnegative, got {u}")));
    }
    ensure_finite(&state.to_array(), "state")?;
    Ok(SystemState::from_array(params.vector_field(&state.to_array(), u)))
}

pub fn rhs_lv(state: &LVState, params: &DimensionlessParams) -> Result<LVState> {
    ensure_finite(&[state.n_v, state.d], "state")?;
    let [n_v, d] = params.lv_field(&[state.n_v, state.d]);
    Ok(LVState { n_v, d })
}

/// First integral of the vector / predator subsystem,
/// `ln N_v - N_v + ln D - D`. Never exceeds `-2`.
pub fn v_lv(n_v: f64, d: f64) -> Result<f64> {
    if !(n_v > 0.0 && d > 0.0) || !n_v.is_finite() || !d.is_finite() {
        return Err(Error::domain(format!("v_lv needs positive arguments, got ({n_v}, {d})")));
    }
    Ok(n_v.ln() - n_v + d.ln() - d)
}

/// Exact first integral of `N_v' = N_v (1 - D)`, `D' = mu_D D (N_v - 1)`:
/// `(ln N_v - N_v) + (ln D - D + 1) / mu_D - 1`.
/// Equals [`v_lv`] when `mu_D = 1`, peaks at `-2` in `(1, 1)` for every `mu_D`.
pub fn lv_first_integral(n_v: f64, d: f64, mu_d: f64) -> Result<f64> {
    if !(mu_d.is_finite() && mu_d > 0.0) {
        return Err(Error::domain(format!("mu_D must be positive, got {mu_d}")));
    }
    v_lv(n_v, d)?;
    Ok(n_v.ln() - n_v + (d.ln() - d + 1.0) / mu_d - 1.0)
}

/// Reference scales linking dimensional and dimensionless variables.
///
/// Time is measured in units of `1/mu_v`, hosts relative to `N_h`, vectors
/// relative to `mu_D / eta` and predators relative to `mu_v / alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub mu_v: f64,
    pub alpha: f64,
    pub eta: f64,
    pub bite_rate: f64,
    pub host_total: f64,
    pub vector_scale: f64,
    pub predator_scale: f64,
}

pub fn nondimensionalize(params: &DimensionalParams) -> Result<(DimensionlessParams, Scales)> {
    params.validate()?;
    let p = params;
    let dimless = DimensionlessParams {
        b_h: p.bite_rate * p.beta_h * p.mu_d / (p.mu_v * p.n_h * p.eta),
        b_v: p.bite_rate * p.beta_v / p.mu_v,
        mu_h: p.mu_h / p.mu_v,
        gamma: p.gamma / p.mu_v,
        mu_d: p.mu_d / p.mu_v,
    };
    let scales = Scales {
        mu_v: p.mu_v,
        alpha: p.alpha,
        eta: p.eta,
        bite_rate: p.bite_rate,
        host_total: p.n_h,
        vector_scale: p.mu_d / p.eta,
        predator_scale: p.mu_v / p.alpha,
    };
    Ok((dimless, scales))
}

impl Scales {
    /// Inverse of [`nondimensionalize`].
    pub fn redimensionalize(&self, p: &DimensionlessParams) -> DimensionalParams {
        let mu_d = p.mu_d * self.mu_v;
        DimensionalParams {
            mu_h: p.mu_h * self.mu_v,
            mu_v: self.mu_v,
            mu_d,
            gamma: p.gamma * self.mu_v,
            alpha: self.alpha,
            eta: self.eta,
            bite_rate: self.bite_rate,
            beta_h: p.b_h * self.mu_v * self.host_total * self.eta / (self.bite_rate * mu_d),
            beta_v: p.b_v * self.mu_v / self.bite_rate,
            n_h: self.host_total,
        }
    }

    pub fn time_to_dimensionless(&self, t: f64) -> f64 {
        self.mu_v * t
    }

    pub fn time_to_dimensional(&self, tau: f64) -> f64 {
        tau / self.mu_v
    }

    /// Factor `mu_v^2 / alpha` with `u_dimensional = factor * u_dimensionless`.
    pub fn control_scale(&self) -> f64 {
        self.mu_v * self.mu_v / self.alpha
    }

    pub fn control_to_dimensionless(&self, u: f64) -> f64 {
        u * self.alpha / (self.mu_v * self.mu_v)
    }

    pub fn control_to_dimensional(&self, u: f64) -> f64 {
        u * self.control_scale()
    }

    fn factors(&self) -> [f64; 5] {
        [
            self.host_total,
            self.host_total,
            self.vector_scale,
            self.vector_scale,
            self.predator_scale,
        ]
    }

    pub fn state_to_dimensionless(&self, s: &SystemState) -> SystemState {
        let f = self.factors();
        let y = s.to_array();
        SystemState::from_array(std::array::from_fn(|i| y[i] / f[i]))
    }

    pub fn state_to_dimensional(&self, s: &SystemState) -> SystemState {
        let f = self.factors();
        let y = s.to_array();
        SystemState::from_array(std::array::from_fn(|i| y[i] * f[i]))
    }

    /// Dimensional full state with `R_h` recovered from the constant host total.
    pub fn full_state_to_dimensional(&self, s: &SystemState) -> FullState {
        let y = self.state_to_dimensional(s);
        FullState {
            s_h: y.s_h,
            i_h: y.i_h,
            r_h: self.host_total - y.s_h - y.i_h,
            s_v: y.s_v,
            i_v: y.i_v,
            d: y.d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table1_dimless() -> DimensionlessParams {
        nondimensionalize(&DimensionalParams::table1()).unwrap().0
    }

    #[test]
    fn full_model_vanishes_at_vector_free_state() {
        let p = DimensionalParams::table1();
        let s = FullState { s_h: p.n_h, ..Default::default() };
        let ds = rhs_full(&s, &p).unwrap();
        assert_eq!(ds.to_array(), [0.0; 6]);
    }

    #[test]
    fn full_model_conserves_hosts() {
        let p = DimensionalParams::table1();
        let s = FullState::from_array([9.0, 1.0, 0.0, 9.0, 1.0, 0.1]);
        let ds = rhs_full(&s, &p).unwrap();
        assert!((ds.s_h + ds.i_h + ds.r_h).abs() < 1e-15);
    }

    #[test]
    fn disease_free_set_is_invariant() {
        let p = DimensionalParams::table1();
        let s = FullState::from_array([7.0, 0.0, 3.0, 4.0, 0.0, 0.5]);
        let ds = rhs_full(&s, &p).unwrap();
        assert_eq!(ds.i_h, 0.0);
        assert_eq!(ds.i_v, 0.0);
    }

    #[test]
    fn non_finite_state_is_rejected() {
        let p = table1_dimless();
        let s = SystemState::new(f64::NAN, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(rhs_dimensionless(&s, &p), Err(Error::Domain(_))));
        let f = FullState { d: f64::INFINITY, ..Default::default() };
        assert!(rhs_full(&f, &DimensionalParams::table1()).is_err());
        assert!(rhs_lv(&LVState { n_v: f64::NAN, d: 1.0 }, &p).is_err());
    }

    #[test]
    fn disease_free_equilibria_are_rest_points() {
        let p = table1_dimless();
        for s in [SystemState::new(1.0, 0.0, 0.0, 0.0, 0.0), SystemState::new(1.0, 0.0, 1.0, 0.0, 1.0)] {
            assert_eq!(rhs_dimensionless(&s, &p).unwrap().to_array(), [0.0; 5]);
        }
    }

    #[test]
    fn control_enters_predator_equation_only() {
        let p = table1_dimless();
        let e2 = SystemState::new(1.0, 0.0, 1.0, 0.0, 1.0);
        assert_eq!(rhs_controlled(&e2, &p, 0.5).unwrap().to_array(), [0.0, 0.0, 0.0, 0.0, 0.5]);

        let s = SystemState::new(0.4, 0.2, 1.3, 0.7, 0.9);
        assert_eq!(rhs_controlled(&s, &p, 0.0).unwrap(), rhs_dimensionless(&s, &p).unwrap());

        let a = rhs_controlled(&e2, &p, 0.3).unwrap().to_array();
        let b = rhs_controlled(&e2, &p, 0.1).unwrap().to_array();
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        assert_eq!(&diff[..4], &[0.0; 4]);
        assert_relative_eq!(diff[4], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn negative_control_is_rejected() {
        let p = table1_dimless();
        assert!(rhs_controlled(&SystemState::default(), &p, -0.1).is_err());
    }

    #[test]
    fn lv_field_examples() {
        let p = table1_dimless();
        let at = |n_v, d| rhs_lv(&LVState { n_v, d }, &p).unwrap();
        assert_eq!(at(1.0, 1.0), LVState { n_v: 0.0, d: 0.0 });
        assert_eq!(at(2.0, 1.0), LVState { n_v: 0.0, d: p.mu_d });
        assert_eq!(at(3.5, 0.0), LVState { n_v: 3.5, d: 0.0 });
    }

    #[test]
    fn table1_rescaled_values() {
        let p = table1_dimless();
        assert_relative_eq!(p.b_h, 3.78, max_relative = 1e-12);
        assert_relative_eq!(p.b_v, 30.8, max_relative = 1e-12);
        assert_relative_eq!(p.mu_h, 2.72e-3, max_relative = 1e-12);
        assert_relative_eq!(p.gamma, 11.2, max_relative = 1e-12);
        assert_relative_eq!(p.mu_d, 12.0, max_relative = 1e-12);
    }

    #[test]
    fn rescaling_round_trip() {
        let p = DimensionalParams::table1();
        let (d, scales) = nondimensionalize(&p).unwrap();
        let back = scales.redimensionalize(&d);
        for (a, b) in [
            (p.mu_h, back.mu_h),
            (p.mu_d, back.mu_d),
            (p.gamma, back.gamma),
            (p.beta_h, back.beta_h),
            (p.beta_v, back.beta_v),
        ] {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
        let u = 0.37;
        assert_relative_eq!(scales.control_to_dimensional(scales.control_to_dimensionless(u)), u, max_relative = 1e-15);
        let s = SystemState::new(9.0, 1.0, 9.0, 1.0, 0.1);
        let back = scales.state_to_dimensional(&scales.state_to_dimensionless(&s));
        for (a, b) in s.to_array().iter().zip(back.to_array()) {
            assert_relative_eq!(*a, b, max_relative = 1e-15);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = DimensionalParams::table1();
        p.eta = 0.0;
        assert!(nondimensionalize(&p).is_err());
    }

    #[test]
    fn v_lv_values() {
        assert_eq!(v_lv(1.0, 1.0).unwrap(), -2.0);
        assert_relative_eq!(v_lv(std::f64::consts::E, 1.0).unwrap(), -std::f64::consts::E, epsilon = 1e-15);
        assert!(v_lv(0.0, 1.0).is_err());
        assert!(v_lv(1.0, -2.0).is_err());
    }

    #[test]
    fn v_lv_bounded_by_minus_two() {
        for &(x, y) in &[(0.1, 5.0), (1.0, 1.0), (3.0, 0.2), (1e-6, 1e3)] {
            assert!(v_lv(x, y).unwrap() <= -2.0);
        }
    }

    #[test]
    fn weighted_first_integral_matches_at_unit_mortality() {
        for &(x, y) in &[(0.1, 5.0), (1.0, 1.0), (3.0, 0.2)] {
            assert_relative_eq!(lv_first_integral(x, y, 1.0).unwrap(), v_lv(x, y).unwrap(), epsilon = 1e-14);
            assert!(lv_first_integral(x, y, 12.0).unwrap() <= -2.0);
        }
        assert_eq!(lv_first_integral(1.0, 1.0, 12.0).unwrap(), -2.0);
        assert!(lv_first_integral(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn weighted_first_integral_is_stationary_along_the_field() {
        let p = DimensionlessParams { b_h: 1.0, b_v: 1.0, mu_h: 1.0, gamma: 1.0, mu_d: 12.0 };
        let (x, y) = (1.7, 0.4);
        let [dx, dy] = p.lv_field(&[x, y]);
        // gradient of the integral dotted with the field
        let rate = (1.0 / x - 1.0) * dx + (1.0 / y - 1.0) / p.mu_d * dy;
        assert!(rate.abs() < 1e-14);
    }
}
