use super::{ControlSignal, CostWeights};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::model::{I_H, S_H};

/// `J(u) = ∫₀ᵀ (c u² + q u + r I_h) dt - a S_h(T)`.
///
/// Each control interval is one Simpson panel using the interval midpoint,
/// which integrates the control terms exactly for the piecewise-linear
/// control and the state term to fourth order.
pub fn objective(state: &Trajectory<5>, control: &ControlSignal, w: &CostWeights) -> Result<f64> {
    let horizon = control.horizon();
    let (t0, t1) = (state.t_start().min(state.t_end()), state.t_start().max(state.t_end()));
    let slack = 1e-12 * horizon;
    if t0.abs() > slack || (t1 - horizon).abs() > slack {
        return Err(Error::domain(format!(
            "state covers [{t0}, {t1}] but the control grid covers [0, {horizon}]"
        )));
    }
    let times = control.times();
    let u = control.values();
    let h = control.spacing();
    let integrand = |t: f64, u: f64| -> Result<f64> {
        let y = state.eval(t.clamp(t0, t1))?;
        Ok(w.c * u * u + w.q * u + w.r * y[I_H])
    };

    let mut running = 0.0;
    let mut left = integrand(times[0], u[0])?;
    for i in 0..control.intervals() {
        let mid = integrand(0.5 * (times[i] + times[i + 1]), 0.5 * (u[i] + u[i + 1]))?;
        let right = integrand(times[i + 1], u[i + 1])?;
        running += h / 6.0 * (left + 4.0 * mid + right);
        left = right;
    }
    let terminal = state.eval(horizon.clamp(t0, t1))?[S_H];
    Ok(running - w.a * terminal)
}
