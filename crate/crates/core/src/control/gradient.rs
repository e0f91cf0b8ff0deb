use serde::Serialize;

use super::{backward_adjoint, forward_state, objective, ControlSignal, CostWeights};
use crate::error::{Error, Result};
use crate::integrator::SolverOptions;
use crate::model::{DimensionlessParams, SystemState, PRED};

/// Perturbation `±eps` applied to every grid node in `[t1, t2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub t1: f64,
    pub t2: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientReport {
    /// Central difference of the maximisation objective `-J`.
    pub finite_difference: f64,
    /// `∫ (p5 - 2 c u - q) δu dt` on the unperturbed adjoint.
    pub adjoint: f64,
    /// `∫ (|p5| + 2 c u + q) δu dt`, the size of the terms being balanced.
    pub term_scale: f64,
    /// `|fd - adjoint| / max(|fd|, |adjoint|)`.
    pub relative_discrepancy: f64,
    /// `|fd - adjoint| / term_scale`; meaningful where the gradient vanishes.
    pub scaled_discrepancy: f64,
    /// Number of bumped grid nodes.
    pub nodes: usize,
}

/// Compares the adjoint directional derivative of `-J` with a central finite
/// difference along a bump of the control. The perturbation direction is the
/// linear interpolant of the indicator of the bumped nodes.
pub fn gradient_check(
    control: &ControlSignal,
    params: &DimensionlessParams,
    w: &CostWeights,
    x0: &SystemState,
    bump: Bump,
    opts: &SolverOptions,
) -> Result<GradientReport> {
    let times = control.times();
    let u = control.values();
    if !(bump.eps > 0.0 && bump.t1 < bump.t2) {
        return Err(Error::domain("bump needs eps > 0 and t1 < t2"));
    }
    let mask: Vec<f64> = times.iter().map(|&t| if t >= bump.t1 && t <= bump.t2 { 1.0 } else { 0.0 }).collect();
    let nodes = mask.iter().filter(|&&m| m > 0.0).count();
    if nodes == 0 {
        return Err(Error::domain("bump interval contains no grid node"));
    }
    for (ui, mi) in u.iter().zip(&mask) {
        if *mi > 0.0 && (ui - bump.eps < 0.0 || ui + bump.eps > w.u_max) {
            return Err(Error::domain(format!("bump leaves the admissible box at control value {ui}")));
        }
    }

    let perturbed = |sign: f64| -> Result<f64> {
        let values = u.iter().zip(&mask).map(|(ui, mi)| ui + sign * bump.eps * mi).collect();
        let c = ControlSignal::new(control.horizon(), values, control.u_max())?;
        let state = forward_state(params, x0, &c, opts)?;
        Ok(-objective(&state, &c, w)?)
    };
    let finite_difference = (perturbed(1.0)? - perturbed(-1.0)?) / (2.0 * bump.eps);

    let state = forward_state(params, x0, control, opts)?;
    let adjoint_traj = backward_adjoint(params, w, &state, control, opts)?;
    let h = control.spacing();
    let mut adjoint = 0.0;
    let mut term_scale = 0.0;
    for i in 0..control.intervals() {
        if mask[i] == 0.0 && mask[i + 1] == 0.0 {
            continue;
        }
        let tm = 0.5 * (times[i] + times[i + 1]);
        let pts = [
            (times[i], u[i], mask[i]),
            (tm, 0.5 * (u[i] + u[i + 1]), 0.5 * (mask[i] + mask[i + 1])),
            (times[i + 1], u[i + 1], mask[i + 1]),
        ];
        for ((t, ui, du), weight) in pts.into_iter().zip([1.0, 4.0, 1.0]) {
            let p5 = adjoint_traj.eval_clamped(t)[PRED];
            adjoint += h / 6.0 * weight * (p5 - 2.0 * w.c * ui - w.q) * du;
            term_scale += h / 6.0 * weight * (p5.abs() + 2.0 * w.c * ui + w.q) * du;
        }
    }

    let diff = (finite_difference - adjoint).abs();
    let denom = finite_difference.abs().max(adjoint.abs());
    Ok(GradientReport {
        finite_difference,
        adjoint,
        term_scale,
        relative_discrepancy: if denom > 0.0 { diff / denom } else { 0.0 },
        scaled_discrepancy: if term_scale > 0.0 { diff / term_scale } else { 0.0 },
        nodes,
    })
}
