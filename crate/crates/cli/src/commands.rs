use std::path::Path;

use serde::Serialize;
use sirsilv::analysis::{
    basic_reproduction_number, classify_equilibria, endemic_equilibrium, metzler_comparison, EquilibriumReport,
};
use sirsilv::control::{forward_state, objective, sweep_solve, ControlSignal};
use sirsilv::model::{FullState, I_H};
use sirsilv::{integrate, DimensionalParams, Scales, SystemState, Trajectory};

use crate::config::{ModelForm, Rescaled, ScenarioConfig};
use crate::output::{adjoint_csv, timeseries_csv, write_json, write_text, Row};
use crate::CliError;

pub const RELAXATION_CONVENTION: &str = "u_{k+1} = d u_k + (1 - d) u*, d weights the previous iterate";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMetrics {
    pub peak_infected: f64,
    pub peak_time: f64,
    /// `∫ I_h dt` over the horizon.
    pub cumulative_infected: f64,
    /// `∫ u dt` over the horizon.
    pub control_effort: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetSummary {
    pub k0: f64,
    pub a: f64,
    pub b: f64,
    pub eco_r0: f64,
    pub metzler_matrix: [[f64; 2]; 2],
    pub metzler_stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationSummary {
    pub objective_uncontrolled: f64,
    pub objective_optimal: f64,
    pub converged: bool,
    pub iterations: usize,
    pub returned_iteration: usize,
    pub final_change: f64,
    pub law_residual: f64,
    pub relaxation_convention: &'static str,
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: &'static str,
    pub units: &'static str,
    pub config: ScenarioConfig,
    pub r0: f64,
    /// Equilibria of the rescaled model.
    pub equilibria: Vec<EquilibriumReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endemic_residual: Option<f64>,
    pub level_sets: Vec<LevelSetSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uncontrolled: Option<RunMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub controlled: Option<RunMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimization: Option<OptimizationSummary>,
}

/// Summary plus the files a command writes, kept in memory until [`Outcome::write`].
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: RunSummary,
    pub files: Vec<(&'static str, String)>,
}

impl Outcome {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        for (name, text) in &self.files {
            write_text(dir, name, text)?;
        }
        write_json(dir, "summary.json", &self.summary)
    }
}

fn numerical(e: sirsilv::Error) -> CliError {
    match e {
        sirsilv::Error::Domain(m) => CliError::Config(m),
        other => CliError::Numerical(other.to_string()),
    }
}

fn base_summary(command: &'static str, cfg: &ScenarioConfig, r: &Rescaled, extra_k0: &[f64]) -> Result<RunSummary, CliError> {
    let p = &r.params;
    let mut k0s = cfg.k0.clone();
    for k in extra_k0 {
        if !k0s.contains(k) {
            k0s.push(*k);
        }
    }
    let level_sets = k0s
        .iter()
        .map(|&k0| {
            let m = metzler_comparison(p, k0).map_err(|e| CliError::Config(format!("k0: {e}")))?;
            Ok(LevelSetSummary {
                k0,
                a: m.bounds.a,
                b: m.bounds.b,
                eco_r0: m.bounds.eco_r0,
                metzler_matrix: m.matrix,
                metzler_stable: m.stable,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let endemic_residual = endemic_equilibrium(p).map(|e| {
        let f = p.vector_field(&e.to_array(), 0.0);
        f.iter().map(|v| v * v).sum::<f64>().sqrt()
    });
    Ok(RunSummary {
        command,
        units: cfg.units(),
        config: cfg.resolved(),
        r0: basic_reproduction_number(p),
        equilibria: classify_equilibria(p),
        endemic_residual,
        level_sets,
        uncontrolled: None,
        controlled: None,
        optimization: None,
    })
}

/// `∫ y[idx] dt` with one Simpson panel per grid interval.
fn simpson<const N: usize>(traj: &Trajectory<N>, grid: &[f64], idx: usize) -> Result<f64, CliError> {
    let mut total = 0.0;
    for w in grid.windows(2) {
        let f = |t: f64| traj.eval(t).map(|y| y[idx]).map_err(numerical);
        total += (w[1] - w[0]) / 6.0 * (f(w[0])? + 4.0 * f(0.5 * (w[0] + w[1]))? + f(w[1])?);
    }
    Ok(total)
}

fn trapezoid(t: &[f64], v: &[f64]) -> f64 {
    t.windows(2).zip(v.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

fn metrics(rows: &[Row], cumulative_infected: f64, objective: Option<f64>) -> RunMetrics {
    let peak = rows.iter().fold(rows[0], |best, r| if r.i_h > best.i_h { *r } else { best });
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let u: Vec<f64> = rows.iter().map(|r| r.u).collect();
    RunMetrics {
        peak_infected: peak.i_h,
        peak_time: peak.t,
        cumulative_infected,
        control_effort: trapezoid(&t, &u),
        objective,
    }
}

/// Rows in the config's units from a rescaled trajectory sampled on `grid`.
fn rows_from_rescaled(
    traj: &Trajectory<5>,
    grid: &[f64],
    control: Option<&ControlSignal>,
    scales: Option<&Scales>,
) -> Result<Vec<Row>, CliError> {
    let states = traj.sample(grid).map_err(numerical)?;
    Ok(grid
        .iter()
        .zip(&states)
        .enumerate()
        .map(|(i, (&tau, y))| {
            let u = control.map_or(0.0, |c| c.values()[i]);
            let x = SystemState::from_array(*y);
            match scales {
                Some(s) => {
                    let f = s.full_state_to_dimensional(&x);
                    Row {
                        t: s.time_to_dimensional(tau),
                        s_h: f.s_h,
                        i_h: f.i_h,
                        r_h: Some(f.r_h),
                        s_v: f.s_v,
                        i_v: f.i_v,
                        d: f.d,
                        u: s.control_to_dimensional(u),
                    }
                }
                None => Row { t: tau, s_h: x.s_h, i_h: x.i_h, r_h: None, s_v: x.s_v, i_v: x.i_v, d: x.d, u },
            }
        })
        .collect())
}

/// Converts `∫ I_h dτ` in rescaled units to the config's units.
fn infected_time_factor(scales: Option<&Scales>) -> f64 {
    scales.map_or(1.0, |s| s.host_total / s.mu_v)
}

fn uniform_grid(horizon: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| horizon * (i as f64 / n as f64)).collect()
}

/// Uncontrolled run. Dimensional configs integrate the full model with
/// recovered hosts directly in days.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let r = cfg.rescaled()?;
    let mut summary = base_summary("simulate", cfg, &r, &[])?;
    let rows = match cfg.model_form {
        ModelForm::Dimensional => {
            let dp: &DimensionalParams = cfg.dimensional_params.as_ref().expect("validated");
            let s = &cfg.initial_state;
            let y0 = FullState { s_h: s.s_h, i_h: s.i_h, r_h: s.r_h.unwrap_or(0.0), s_v: s.s_v, i_v: s.i_v, d: s.d };
            let traj = integrate(|_, y| dp.full_field(y), y0.to_array(), (0.0, cfg.horizon), &cfg.solver)
                .map_err(|e| numerical(e.into()))?;
            let grid = uniform_grid(cfg.horizon, r.intervals);
            let states = traj.sample(&grid).map_err(numerical)?;
            let rows: Vec<Row> = grid
                .iter()
                .zip(&states)
                .map(|(&t, y)| Row { t, s_h: y[0], i_h: y[1], r_h: Some(y[2]), s_v: y[3], i_v: y[4], d: y[5], u: 0.0 })
                .collect();
            summary.uncontrolled = Some(metrics(&rows, simpson(&traj, &grid, 1)?, None));
            rows
        }
        ModelForm::Dimensionless => {
            let p = r.params;
            let traj = integrate(|_, y| p.vector_field(y, 0.0), r.x0.to_array(), (0.0, r.horizon), &r.solver)
                .map_err(|e| numerical(e.into()))?;
            let grid = uniform_grid(r.horizon, r.intervals);
            let rows = rows_from_rescaled(&traj, &grid, None, None)?;
            summary.uncontrolled = Some(metrics(&rows, simpson(&traj, &grid, I_H)?, None));
            rows
        }
    };
    Ok(Outcome { summary, files: vec![("timeseries.csv", timeseries_csv(&rows))] })
}

pub fn analyze(cfg: &ScenarioConfig, extra_k0: &[f64]) -> Result<Outcome, CliError> {
    if let Some(k) = extra_k0.iter().find(|k| !(k.is_finite() && **k <= -2.0)) {
        return Err(CliError::Config(format!("--k0 {k}: k0 > -2 is not possible, the first integral never exceeds -2")));
    }
    let r = cfg.rescaled()?;
    Ok(Outcome { summary: base_summary("analyze", cfg, &r, extra_k0)?, files: Vec::new() })
}

/// Forward-backward sweep plus the uncontrolled baseline on the same grid.
pub fn optimize(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let r = cfg.rescaled()?;
    let (w, opts) = r.problem.ok_or_else(|| CliError::Config("cost: optimize needs cost weights".into()))?;
    let mut summary = base_summary("optimize", cfg, &r, &[])?;
    let scales = r.scales.as_ref();

    let res = sweep_solve(&r.params, &w, &r.x0, &opts).map_err(numerical)?;
    let zero = ControlSignal::constant(w.horizon, opts.grid_intervals, 0.0, w.u_max).map_err(numerical)?;
    let base = forward_state(&r.params, &r.x0, &zero, &opts.solver).map_err(numerical)?;
    let j0 = objective(&base, &zero, &w).map_err(numerical)?;
    let grid = res.control.times();

    let controlled = rows_from_rescaled(&res.state, &grid, Some(&res.control), scales)?;
    let uncontrolled = rows_from_rescaled(&base, &grid, None, scales)?;
    let factor = infected_time_factor(scales);
    summary.controlled = Some(metrics(&controlled, factor * simpson(&res.state, &grid, I_H)?, Some(res.objective())));
    summary.uncontrolled = Some(metrics(&uncontrolled, factor * simpson(&base, &grid, I_H)?, Some(j0)));
    summary.optimization = Some(OptimizationSummary {
        objective_uncontrolled: j0,
        objective_optimal: res.objective(),
        converged: res.converged,
        iterations: res.iterations,
        returned_iteration: res.returned_iteration,
        final_change: res.final_change,
        law_residual: scales.map_or(res.law_residual, |s| s.control_to_dimensional(res.law_residual)),
        relaxation_convention: RELAXATION_CONVENTION,
        objective_history: res.objective_history.clone(),
    });

    // costates of the dimensional problem are the rescaled ones divided by the state scales
    let adjoint = res.adjoint.sample(&grid).map_err(numerical)?;
    let (times, costates): (Vec<f64>, Vec<[f64; 5]>) = match scales {
        Some(s) => {
            let f = [s.host_total, s.host_total, s.vector_scale, s.vector_scale, s.predator_scale];
            let t = grid.iter().map(|&tau| s.time_to_dimensional(tau)).collect();
            (t, adjoint.iter().map(|p| std::array::from_fn(|i| p[i] / f[i])).collect())
        }
        None => (grid.clone(), adjoint),
    };

    Ok(Outcome {
        summary,
        files: vec![
            ("timeseries.csv", timeseries_csv(&controlled)),
            ("baseline.csv", timeseries_csv(&uncontrolled)),
            ("adjoint.csv", adjoint_csv(&times, &costates)),
        ],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareEntry {
    pub label: &'static str,
    pub horizon: f64,
    pub units: &'static str,
    pub objective_uncontrolled: Option<f64>,
    pub objective_optimal: Option<f64>,
    pub converged: Option<bool>,
    pub peak_infected: f64,
    pub cumulative_infected: f64,
    pub control_effort: f64,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareDiff {
    pub objective_optimal: Option<f64>,
    pub peak_infected: f64,
    pub cumulative_infected: f64,
    pub control_effort: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub runs: [CompareEntry; 2],
    /// Second run minus first.
    pub differences: CompareDiff,
}

fn entry(label: &'static str, cfg: &ScenarioConfig, out: &Outcome) -> CompareEntry {
    let m = out.summary.controlled.or(out.summary.uncontrolled).expect("every run reports metrics");
    let opt = out.summary.optimization.as_ref();
    CompareEntry {
        label,
        horizon: cfg.horizon,
        units: cfg.units(),
        objective_uncontrolled: opt.map(|o| o.objective_uncontrolled),
        objective_optimal: opt.map(|o| o.objective_optimal),
        converged: opt.map(|o| o.converged),
        peak_infected: m.peak_infected,
        cumulative_infected: m.cumulative_infected,
        control_effort: m.control_effort,
        config: cfg.resolved(),
    }
}

/// Runs both scenarios concurrently: `optimize` when cost weights are given,
/// `simulate` otherwise.
pub fn compare(a: &ScenarioConfig, b: &ScenarioConfig) -> Result<Comparison, CliError> {
    if a.model_form != b.model_form {
        return Err(CliError::Config("compare: both configs must share model_form".into()));
    }
    let run = |c: &ScenarioConfig| if c.cost.is_some() { optimize(c) } else { simulate(c) };
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| run(a));
        let hb = s.spawn(|| run(b));
        (ha.join().expect("scenario thread panicked"), hb.join().expect("scenario thread panicked"))
    });
    let (ea, eb) = (entry("A", a, &ra?), entry("B", b, &rb?));
    let differences = CompareDiff {
        objective_optimal: ea.objective_optimal.zip(eb.objective_optimal).map(|(x, y)| y - x),
        peak_infected: eb.peak_infected - ea.peak_infected,
        cumulative_infected: eb.cumulative_infected - ea.cumulative_infected,
        control_effort: eb.control_effort - ea.control_effort,
    };
    Ok(Comparison { runs: [ea, eb], differences })
}
