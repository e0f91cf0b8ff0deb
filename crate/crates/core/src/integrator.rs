//! Dormand–Prince 5(4) integration with the pair's standard continuous
//! extension, for fixed-size state vectors.
//!
//! Integration runs in either direction: a span `(t0, t1)` with `t1 < t0`
//! integrates backward with negative steps. [`integrate_through`] forces the
//! step sequence to land on a list of interior nodes, which is how solves
//! driven by grid-interpolated inputs avoid stepping across kinks.

use std::fmt;

use crate::error::Error;

// Dormand & Prince (1980) coefficients, in the layout of Hairer's DOPRI5.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Magnitude of the first trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    /// Upper bound on attempted (accepted plus rejected) steps.
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-10, initial_step: None, max_steps: 1_000_000 }
    }
}

impl SolverOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let tol_ok = |v: f64| v.is_finite() && v > 0.0;
        if !tol_ok(self.rel_tol) || !tol_ok(self.abs_tol) {
            return Err(Error::Domain("solver tolerances must be positive".into()));
        }
        if self.max_steps < 1 {
            return Err(Error::Domain("max_steps must be at least 1".into()));
        }
        if let Some(h) = self.initial_step {
            if !tol_ok(h) {
                return Err(Error::Domain("initial_step must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// Dense solution produced by [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    times: Vec<f64>,
    values: Vec<[f64; N]>,
    // Continuous-extension coefficients of step i, valid on [times[i], times[i+1]].
    dense: Vec<[[f64; N]; 5]>,
    direction: Direction,
    rhs_evals: usize,
}

impl<const N: usize> Trajectory<N> {
    fn start(t0: f64, y0: [f64; N], direction: Direction) -> Self {
        Self { times: vec![t0], values: vec![y0], dense: Vec::new(), direction, rhs_evals: 0 }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[[f64; N]] {
        &self.values
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn first(&self) -> [f64; N] {
        self.values[0]
    }

    pub fn last(&self) -> [f64; N] {
        *self.values.last().unwrap()
    }

    pub fn steps(&self) -> usize {
        self.dense.len()
    }

    pub fn rhs_evals(&self) -> usize {
        self.rhs_evals
    }

    fn bounds(&self) -> (f64, f64) {
        let (a, b) = (self.t_start(), self.t_end());
        if a <= b { (a, b) } else { (b, a) }
    }

    /// Evaluates the solution at `t`. Breakpoints return their stored values
    /// exactly; anything in between uses the step's continuous extension.
    pub fn eval(&self, t: f64) -> Result<[f64; N], Error> {
        let (lo, hi) = self.bounds();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let forward = self.direction == Direction::Forward;
        // index of the first breakpoint strictly beyond t in the direction of travel
        let idx = self.times.partition_point(|&s| if forward { s <= t } else { s >= t });
        if idx > 0 && self.times[idx - 1] == t {
            return Ok(self.values[idx - 1]);
        }
        let i = idx.saturating_sub(1).min(self.dense.len().saturating_sub(1));
        if self.dense.is_empty() {
            return Ok(self.values[0]);
        }
        let h = self.times[i + 1] - self.times[i];
        let theta = (t - self.times[i]) / h;
        let theta1 = 1.0 - theta;
        let r = &self.dense[i];
        Ok(std::array::from_fn(|k| {
            r[0][k] + theta * (r[1][k] + theta1 * (r[2][k] + theta * (r[3][k] + theta1 * r[4][k])))
        }))
    }

    /// Like [`eval`](Self::eval) with `t` clamped into the covered span; for
    /// right-hand sides fed by another solution, whose stage times can
    /// overshoot the span by rounding.
    pub fn eval_clamped(&self, t: f64) -> [f64; N] {
        let (lo, hi) = self.bounds();
        self.eval(t.clamp(lo, hi)).expect("clamped time is in range")
    }

    /// Dense-output evaluation at each grid time.
    pub fn sample(&self, grid: &[f64]) -> Result<Vec<[f64; N]>, Error> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }
}

/// Samples a trajectory on a grid; see [`Trajectory::sample`].
pub fn sample<const N: usize>(traj: &Trajectory<N>, grid: &[f64]) -> Result<Vec<[f64; N]>, Error> {
    traj.sample(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    StepSizeUnderflow,
    MaxStepsExceeded,
    NonFiniteDerivative,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::StepSizeUnderflow => "step size underflow",
            FailureKind::MaxStepsExceeded => "maximum number of steps exceeded",
            FailureKind::NonFiniteDerivative => "non-finite derivative",
        })
    }
}

/// Integration failure, carrying the solution computed up to the failure.
#[derive(Debug, Clone)]
pub struct IntegrationError<const N: usize> {
    pub kind: FailureKind,
    pub t: f64,
    pub partial: Trajectory<N>,
}

impl<const N: usize> fmt::Display for IntegrationError<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at t = {}", self.kind, self.t)
    }
}

impl<const N: usize> std::error::Error for IntegrationError<N> {}

impl<const N: usize> From<IntegrationError<N>> for Error {
    fn from(e: IntegrationError<N>) -> Self {
        Error::Integration { t: e.t, reason: e.kind.to_string() }
    }
}

/// Integrates `y' = rhs(t, y)` from `t_span.0` to `t_span.1`.
pub fn integrate<const N: usize, F>(
    rhs: F,
    y0: [f64; N],
    t_span: (f64, f64),
    opts: &SolverOptions,
) -> Result<Trajectory<N>, IntegrationError<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    integrate_through(rhs, y0, &[t_span.0, t_span.1], opts)
}

/// Integrates across a monotone list of nodes `t_0, ..., t_m`, never stepping
/// over an interior node. Zero-length segments are skipped.
pub fn integrate_through<const N: usize, F>(
    mut rhs: F,
    y0: [f64; N],
    nodes: &[f64],
    opts: &SolverOptions,
) -> Result<Trajectory<N>, IntegrationError<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    assert!(nodes.len() >= 2, "need at least a start and an end time");
    let t0 = nodes[0];
    let t_end = *nodes.last().unwrap();
    assert!(t0 != t_end && t0.is_finite() && t_end.is_finite(), "degenerate integration span");
    let dir = if t_end > t0 { 1.0 } else { -1.0 };
    assert!(
        nodes.windows(2).all(|w| (w[1] - w[0]) * dir >= 0.0),
        "nodes must be monotone in the direction of integration"
    );
    opts.validate().expect("invalid solver options");

    let direction = if dir > 0.0 { Direction::Forward } else { Direction::Backward };
    let mut traj = Trajectory::start(t0, y0, direction);
    let fail = |kind, t, traj: Trajectory<N>| Err(IntegrationError { kind, t, partial: traj });

    if !y0.iter().all(|v| v.is_finite()) {
        return fail(FailureKind::NonFiniteDerivative, t0, traj);
    }

    let mut t = t0;
    let mut y = y0;
    let mut h_abs = 0.0;
    let mut attempts = 0usize;

    for &target in &nodes[1..] {
        if target == t {
            continue;
        }
        let mut k1 = rhs(t, &y);
        traj.rhs_evals += 1;
        if !k1.iter().all(|v| v.is_finite()) {
            return fail(FailureKind::NonFiniteDerivative, t, traj);
        }
        if h_abs == 0.0 {
            h_abs = match opts.initial_step {
                Some(h) => h,
                None => {
                    let (h, evals) = initial_step(&mut rhs, t, &y, &k1, dir, (t_end - t).abs(), opts);
                    traj.rhs_evals += evals;
                    h
                }
            };
        }
        let mut last_rejected = false;
        let mut last_nonfinite = false;

        loop {
            let remaining = (target - t).abs();
            if remaining == 0.0 {
                break;
            }
            attempts += 1;
            if attempts > opts.max_steps {
                return fail(FailureKind::MaxStepsExceeded, t, traj);
            }
            if h_abs < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                let kind = if last_nonfinite { FailureKind::NonFiniteDerivative } else { FailureKind::StepSizeUnderflow };
                return fail(kind, t, traj);
            }
            let lands = h_abs >= remaining;
            let h = if lands { remaining * dir } else { h_abs * dir };

            let step = dp_step(&mut rhs, t, &y, &k1, h);
            traj.rhs_evals += 6;
            let Some(step) = step else {
                // overflow inside the trial step: shrink and retry
                h_abs = h.abs() * MIN_SCALE;
                last_rejected = true;
                last_nonfinite = true;
                continue;
            };
            last_nonfinite = false;

            let err = error_norm(&step.err, &y, &step.y1, opts);
            if err <= 1.0 {
                let t_new = if lands { target } else { t + h };
                traj.times.push(t_new);
                traj.values.push(step.y1);
                traj.dense.push(dense_coefficients(&y, &step, h));
                let mut scale = if err == 0.0 { MAX_SCALE } else { SAFETY * err.powf(-0.2) };
                scale = scale.clamp(MIN_SCALE, MAX_SCALE);
                if last_rejected {
                    scale = scale.min(1.0);
                }
                // a step clipped to land on the node says nothing about growth
                h_abs = if lands { h_abs.max(h.abs() * scale) } else { h.abs() * scale };
                t = t_new;
                y = step.y1;
                k1 = step.k7;
                last_rejected = false;
            } else {
                let scale = (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, 1.0);
                h_abs = h.abs() * scale;
                last_rejected = true;
            }
        }
    }
    Ok(traj)
}

struct Step<const N: usize> {
    y1: [f64; N],
    err: [f64; N],
    k: [[f64; N]; 7],
    k7: [f64; N],
}

fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn dp_step<const N: usize, F>(rhs: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> Option<Step<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k1 = *k1;
    let k2 = rhs(t + C2 * h, &combo(y, h, &[(A21, &k1)]));
    let k3 = rhs(t + C3 * h, &combo(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = rhs(t + C4 * h, &combo(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = rhs(t + C5 * h, &combo(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = rhs(t + h, &combo(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y1 = combo(y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = rhs(t + h, &y1);
    let finite = |v: &[f64; N]| v.iter().all(|x| x.is_finite());
    if ![&k2, &k3, &k4, &k5, &k6, &k7, &y1].iter().all(|v| finite(v)) {
        return None;
    }
    let err = std::array::from_fn(|i| {
        h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
    });
    Some(Step { y1, err, k: [k1, k2, k3, k4, k5, k6, k7], k7 })
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], opts: &SolverOptions) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sk = opts.abs_tol + opts.rel_tol * y0[i].abs().max(y1[i].abs());
            (err[i] / sk).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn dense_coefficients<const N: usize>(y0: &[f64; N], step: &Step<N>, h: f64) -> [[f64; N]; 5] {
    let k = &step.k;
    let diff: [f64; N] = std::array::from_fn(|i| step.y1[i] - y0[i]);
    let bspl: [f64; N] = std::array::from_fn(|i| h * k[0][i] - diff[i]);
    [
        *y0,
        diff,
        bspl,
        std::array::from_fn(|i| diff[i] - h * k[6][i] - bspl[i]),
        std::array::from_fn(|i| {
            h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i])
        }),
    ]
}

// Starting step heuristic of Hairer, Nørsett & Wanner.
fn initial_step<const N: usize, F>(
    rhs: &mut F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    span: f64,
    opts: &SolverOptions,
) -> (f64, usize)
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let sk: [f64; N] = std::array::from_fn(|i| opts.abs_tol + opts.rel_tol * y0[i].abs());
    let rms = |v: &[f64; N]| ((0..N).map(|i| (v[i] / sk[i]).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: [f64; N] = std::array::from_fn(|i| y0[i] + dir * h0 * f0[i]);
    let f1 = rhs(t0 + dir * h0, &y1);
    let df: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = rms(&df) / h0;
    let dm = d1.max(d2);
    let h1 = if !dm.is_finite() {
        h0 * 1e-3
    } else if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    ((100.0 * h0).min(h1).min(span), 1)
}
