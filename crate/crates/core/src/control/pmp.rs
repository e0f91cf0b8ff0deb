use super::{AdjointState, CostWeights};
use crate::error::{Error, Result};
use crate::model::{DimensionlessParams, SystemState};

/// Half-width of the band `|p5 - q| <= SINGULAR_TIE` where the linear-cost
/// law is undetermined.
pub const SINGULAR_TIE: f64 = 1e-10;

/// `H = p · f(X, u) - (c u² + q u + r I_h)`.
pub fn hamiltonian(
    state: &SystemState,
    u: f64,
    p: &AdjointState,
    params: &DimensionlessParams,
    w: &CostWeights,
) -> Result<f64> {
    if !(0.0..=w.u_max).contains(&u) {
        return Err(Error::domain(format!("control {u} outside [0, {}]", w.u_max)));
    }
    let f = params.vector_field(&state.to_array(), u);
    let pf: f64 = p.to_array().iter().zip(&f).map(|(a, b)| a * b).sum();
    Ok(pf - (w.c * u * u + w.q * u + w.r * state.i_h))
}

/// Costate dynamics `p' = -∂H/∂X` in array form.
pub fn adjoint_field(p: &[f64; 5], x: &[f64; 5], params: &DimensionlessParams, r: f64) -> [f64; 5] {
    let [p1, p2, p3, p4, p5] = *p;
    let [s_h, i_h, s_v, i_v, d] = *x;
    let DimensionlessParams { b_h, b_v, mu_h, mu_d, .. } = *params;
    [
        (p1 - p2) * b_h * i_v + p1 * mu_h,
        p2 * params.removal() + (p3 - p4) * b_v * s_v + r,
        p3 * (-1.0 + d) + (p3 - p4) * b_v * i_h - p5 * mu_d * d,
        (p1 - p2) * b_h * s_h - p3 + p4 * d - p5 * mu_d * d,
        p3 * s_v + p4 * i_v - p5 * mu_d * (s_v + i_v) + p5 * mu_d,
    ]
}

pub fn adjoint_rhs(
    p: &AdjointState,
    state: &SystemState,
    params: &DimensionlessParams,
    w: &CostWeights,
) -> AdjointState {
    AdjointState::from_array(adjoint_field(&p.to_array(), &state.to_array(), params, w.r))
}

/// Pointwise maximiser of `u ↦ p5 u - c u² - q u` over `[0, u_max]`.
/// In the linear-cost tie the lower bound is returned; every admissible
/// value is optimal there.
pub fn optimal_u(p5: f64, w: &CostWeights) -> f64 {
    optimal_u_with_tie(p5, w, 0.0)
}

/// As [`optimal_u`], returning `tie` (clamped into the box) when `c = 0` and
/// `|p5 - q| <= SINGULAR_TIE`.
pub fn optimal_u_with_tie(p5: f64, w: &CostWeights, tie: f64) -> f64 {
    if w.c > 0.0 {
        ((p5 - w.q) / (2.0 * w.c)).clamp(0.0, w.u_max)
    } else if (p5 - w.q).abs() <= SINGULAR_TIE {
        tie.clamp(0.0, w.u_max)
    } else if p5 > w.q {
        w.u_max
    } else {
        0.0
    }
}
