use nalgebra::Matrix2;
use serde::Serialize;

use super::{basic_reproduction_number, eigenvalues2, Eigenvalue};
use crate::error::{Error, Result};
use crate::integrator::{integrate, SolverOptions, Trajectory};
use crate::model::{v_lv, DimensionlessParams, I_H, I_V, PRED, S_H, S_V};

/// Bounds on `N_v` and `D` inside the predator–prey orbit `V_LV = k0`, and
/// the resulting ecological reproduction number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSetBounds {
    pub k0: f64,
    pub a: f64,
    pub b: f64,
    pub eco_r0: f64,
}

/// `a(k0)` and `b(k0)` are the two roots of `ln x - x = k0 + 1`, the extreme
/// values either coordinate reaches on the orbit when the other sits at 1.
pub fn level_set_bounds(k0: f64, p: &DimensionlessParams) -> Result<LevelSetBounds> {
    if !k0.is_finite() {
        return Err(Error::domain("k0 must be finite"));
    }
    if k0 > -2.0 {
        return Err(Error::domain(format!(
            "k0 = {k0} > -2 is not possible: the first integral never exceeds -2"
        )));
    }
    let r0_sq = basic_reproduction_number(p).powi(2);
    if k0 == -2.0 {
        return Ok(LevelSetBounds { k0, a: 1.0, b: 1.0, eco_r0: r0_sq });
    }
    let level = k0 + 1.0;
    // g < 0 outside [a, b], g > 0 strictly inside
    let g = |x: f64| x.ln() - x - level;

    let mut lo = 1e-12;
    while g(lo) >= 0.0 {
        lo *= 1e-3;
    }
    let a = bisect(g, lo, 1.0);

    let mut hi = 2.0;
    while g(hi) >= 0.0 {
        hi *= 2.0;
    }
    let b = bisect(g, hi, 1.0);

    Ok(LevelSetBounds { k0, a, b, eco_r0: r0_sq * b / a })
}

/// Bisection between `outside` (g < 0) and `inside` (g >= 0) down to adjacent
/// floats. Returns the last point with g < 0, so the result lies strictly
/// outside the interval of positivity.
fn bisect(g: impl Fn(f64) -> f64, mut outside: f64, mut inside: f64) -> f64 {
    for _ in 0..4096 {
        let mid = 0.5 * (outside + inside);
        if mid == outside || mid == inside {
            break;
        }
        if g(mid) < 0.0 {
            outside = mid;
        } else {
            inside = mid;
        }
    }
    outside
}

#[derive(Debug, Clone, Serialize)]
pub struct MetzlerComparison {
    /// `[[-(gamma+mu_h), B_h], [B_v b(k0), -a(k0)]]`.
    pub matrix: [[f64; 2]; 2],
    pub bounds: LevelSetBounds,
    pub trace: f64,
    pub det: f64,
    pub eigenvalues: [Eigenvalue; 2],
    /// Negative trace and positive determinant: both eigenvalues in the left half-plane.
    pub stable: bool,
}

impl MetzlerComparison {
    pub fn matrix2(&self) -> Matrix2<f64> {
        let m = &self.matrix;
        Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

pub fn metzler_comparison(p: &DimensionlessParams, k0: f64) -> Result<MetzlerComparison> {
    let bounds = level_set_bounds(k0, p)?;
    let m = Matrix2::new(-p.removal(), p.b_h, p.b_v * bounds.b, -bounds.a);
    let trace = m.trace();
    let det = p.removal() * bounds.a - p.b_h * p.b_v * bounds.b;
    Ok(MetzlerComparison {
        matrix: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
        bounds,
        trace,
        det,
        eigenvalues: eigenvalues2(&m),
        stable: trace < 0.0 && det > 0.0,
    })
}

/// Outcome of comparing infective trajectories against `z' = M z`.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub metzler: MetzlerComparison,
    pub grid: Vec<f64>,
    /// `(z1, z2)` on the grid.
    pub z: Vec<[f64; 2]>,
    /// `max_t I_h(t) - z1(t)`.
    pub max_excess_h: f64,
    /// `max_t I_v(t) - z2(t)`.
    pub max_excess_v: f64,
    /// First grid time at which the state leaves the region bounded by the
    /// orbit `V_LV = k0` (or violates `S_h + I_h <= 1`).
    pub region_exit: Option<f64>,
    /// First grid time with `max(z1, z2) < DECAY_LEVEL`.
    pub decay_horizon: Option<f64>,
    /// `(I_h, I_v)` at the decay horizon.
    pub infectives_at_horizon: Option<[f64; 2]>,
}

pub const DECAY_LEVEL: f64 = 1e-6;
const REGION_SLACK: f64 = 1e-8;

/// Integrates the comparison system from `(I_h(0), I_v(0))` over the span of
/// `traj` and compares both on `grid`.
pub fn comparison_bound_check(
    traj: &Trajectory<5>,
    p: &DimensionlessParams,
    k0: f64,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<ComparisonReport> {
    let metzler = metzler_comparison(p, k0)?;
    let m = metzler.matrix2();
    let states = traj.sample(grid)?;
    let y0 = traj.first();
    let z0 = [y0[I_H], y0[I_V]];

    let z_traj = integrate(
        |_, z: &[f64; 2]| [m[(0, 0)] * z[0] + m[(0, 1)] * z[1], m[(1, 0)] * z[0] + m[(1, 1)] * z[1]],
        z0,
        (traj.t_start(), traj.t_end()),
        opts,
    )?;
    let z = z_traj.sample(grid)?;

    let mut max_excess_h = f64::NEG_INFINITY;
    let mut max_excess_v = f64::NEG_INFINITY;
    let mut region_exit = None;
    let mut decay_horizon = None;
    let mut infectives_at_horizon = None;
    for ((&t, y), zi) in grid.iter().zip(&states).zip(&z) {
        max_excess_h = max_excess_h.max(y[I_H] - zi[0]);
        max_excess_v = max_excess_v.max(y[I_V] - zi[1]);
        if region_exit.is_none() {
            let hosts_ok = y[S_H] + y[I_H] <= 1.0 + REGION_SLACK;
            let inside = v_lv(y[S_V] + y[I_V], y[PRED]).map(|v| v >= k0 - REGION_SLACK).unwrap_or(false);
            if !(hosts_ok && inside) {
                region_exit = Some(t);
            }
        }
        if decay_horizon.is_none() && zi[0].max(zi[1]) < DECAY_LEVEL {
            decay_horizon = Some(t);
            infectives_at_horizon = Some([y[I_H], y[I_V]]);
        }
    }

    Ok(ComparisonReport {
        metzler,
        grid: grid.to_vec(),
        z,
        max_excess_h,
        max_excess_v,
        region_exit,
        decay_horizon,
        infectives_at_horizon,
    })
}
