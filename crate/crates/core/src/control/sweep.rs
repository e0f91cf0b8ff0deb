//! Forward-backward sweep for the predator-release problem.
//!
//! Each iteration integrates the controlled state forward, the costates
//! backward from `p(T) = (a, 0, 0, 0, 0)`, evaluates the pointwise optimal
//! control on the grid and relaxes towards it with
//! `u_{k+1} = d u_k + (1 - d) u*`.

use serde::{Deserialize, Serialize};

use super::{adjoint_field, objective, optimal_u_with_tie, ControlSignal, CostWeights};
use crate::error::{Error, Result};
use crate::integrator::{integrate_through, SolverOptions, Trajectory};
use crate::model::{DimensionlessParams, Scales, SystemState, PRED};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    /// Weight `d` of the previous control in the relaxed update.
    pub relaxation: f64,
    pub initial_control: f64,
    pub grid_intervals: usize,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
    pub solver: SolverOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            relaxation: 0.1,
            initial_control: 0.1,
            grid_intervals: 2000,
            tol_abs: 1e-6,
            tol_rel: 1e-4,
            max_iter: 200,
            solver: SolverOptions::default(),
        }
    }
}

impl SweepOptions {
    pub fn validate(&self, w: &CostWeights) -> Result<()> {
        if !(0.0..1.0).contains(&self.relaxation) {
            return Err(Error::domain("relaxation d must lie in [0, 1)"));
        }
        if !(0.0..=w.u_max).contains(&self.initial_control) {
            return Err(Error::domain("initial control must lie in [0, u_max]"));
        }
        if self.grid_intervals < 2 {
            return Err(Error::domain("grid needs at least two intervals"));
        }
        if !(self.tol_abs >= 0.0 && self.tol_rel >= 0.0) {
            return Err(Error::domain("sweep tolerances must be nonnegative"));
        }
        if self.max_iter < 1 {
            return Err(Error::domain("max_iter must be at least 1"));
        }
        self.solver.validate()
    }

    /// Options for solving a dimensional problem in rescaled variables: the
    /// initial control and the absolute tolerance are control values and are
    /// divided by the control scale.
    pub fn to_dimensionless(&self, s: &Scales) -> SweepOptions {
        SweepOptions {
            initial_control: s.control_to_dimensionless(self.initial_control),
            tol_abs: s.control_to_dimensionless(self.tol_abs),
            ..*self
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub control: ControlSignal,
    pub state: Trajectory<5>,
    pub adjoint: Trajectory<5>,
    /// Objective of the control used in each iteration's forward solve.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm change of the control in the last update.
    pub final_change: f64,
    /// Max-norm distance between the returned control and the pointwise law
    /// evaluated on the returned adjoint.
    pub law_residual: f64,
    /// Zero-based index of the returned iterate.
    pub returned_iteration: usize,
}

impl SweepResult {
    pub fn objective(&self) -> f64 {
        self.objective_history[self.returned_iteration]
    }

    /// Running minimum of the objective history.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.objective_history
            .iter()
            .scan(f64::INFINITY, |best, &j| {
                *best = best.min(j);
                Some(*best)
            })
            .collect()
    }
}

/// Controlled state from `x0` over the control's horizon. Steps land on every
/// grid node so each step sees a linear control.
pub fn forward_state(
    params: &DimensionlessParams,
    x0: &SystemState,
    control: &ControlSignal,
    opts: &SolverOptions,
) -> Result<Trajectory<5>> {
    let nodes = control.times();
    Ok(integrate_through(|t, y| params.vector_field(y, control.eval(t)), x0.to_array(), &nodes, opts)?)
}

/// Costates from `p(T) = (a, 0, 0, 0, 0)` backward to 0 along `state`.
pub fn backward_adjoint(
    params: &DimensionlessParams,
    w: &CostWeights,
    state: &Trajectory<5>,
    control: &ControlSignal,
    opts: &SolverOptions,
) -> Result<Trajectory<5>> {
    let mut nodes = control.times();
    nodes.reverse();
    let terminal = [w.a, 0.0, 0.0, 0.0, 0.0];
    Ok(integrate_through(|t, p| adjoint_field(p, &state.eval_clamped(t), params, w.r), terminal, &nodes, opts)?)
}

struct Iterate {
    control: ControlSignal,
    state: Trajectory<5>,
    adjoint: Trajectory<5>,
    objective: f64,
    index: usize,
    law_residual: f64,
}

/// Solves the optimality system by forward-backward sweeps.
///
/// Stops when `max |u_{k+1} - u_k| <= tol_abs + tol_rel max |u_k|` and returns
/// the iterate `u_k`. Without convergence the iterate with the smallest
/// objective is returned and `converged` is false.
pub fn sweep_solve(
    params: &DimensionlessParams,
    w: &CostWeights,
    x0: &SystemState,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    params.validate()?;
    w.validate()?;
    opts.validate(w)?;
    x0.validate_nonnegative()?;

    let times_len = opts.grid_intervals + 1;
    let grid = ControlSignal::constant(w.horizon, opts.grid_intervals, 0.0, w.u_max)?.times();
    let d = opts.relaxation;
    let mut control = ControlSignal::constant(w.horizon, opts.grid_intervals, opts.initial_control, w.u_max)?;
    let mut history = Vec::with_capacity(opts.max_iter);
    let mut best: Option<Iterate> = None;

    for k in 0..opts.max_iter {
        let wrap = |e: Error| Error::Sweep { iteration: k, source: Box::new(e) };
        let state = forward_state(params, x0, &control, &opts.solver).map_err(wrap)?;
        let j = objective(&state, &control, w).map_err(wrap)?;
        history.push(j);
        let adjoint = backward_adjoint(params, w, &state, &control, &opts.solver).map_err(wrap)?;

        let p = adjoint.sample(&grid).map_err(wrap)?;
        let old = control.values();
        let mut next = Vec::with_capacity(times_len);
        let mut change: f64 = 0.0;
        let mut law_residual: f64 = 0.0;
        for (pi, &ui) in p.iter().zip(old) {
            let star = optimal_u_with_tie(pi[PRED], w, ui);
            let ni = (d * ui + (1.0 - d) * star).clamp(0.0, w.u_max);
            change = change.max((ni - ui).abs());
            law_residual = law_residual.max((star - ui).abs());
            next.push(ni);
        }
        let scale = old.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let converged = change <= opts.tol_abs + opts.tol_rel * scale;

        let current = Iterate { control, state, adjoint, objective: j, index: k, law_residual };
        if converged || k + 1 == opts.max_iter {
            let chosen = match best {
                Some(b) if !converged && b.objective < current.objective => b,
                _ => current,
            };
            return Ok(SweepResult {
                control: chosen.control,
                state: chosen.state,
                adjoint: chosen.adjoint,
                objective_history: history,
                iterations: k + 1,
                converged,
                final_change: change,
                law_residual: chosen.law_residual,
                returned_iteration: chosen.index,
            });
        }
        if best.as_ref().is_none_or(|b| current.objective < b.objective) {
            best = Some(current);
        }
        control = ControlSignal::new(w.horizon, next, w.u_max)?;
    }
    unreachable!("max_iter >= 1 guarantees a return inside the loop")
}
