//! Shared fixtures for the benchmarks.

use sirsilv::control::{CostWeights, SweepOptions};
use sirsilv::{nondimensionalize, DimensionalParams, DimensionlessParams, SystemState};

/// The reference release problem in rescaled variables over `days`.
pub fn reference_problem(c: f64, days: f64, intervals: usize) -> (DimensionlessParams, CostWeights, SystemState, SweepOptions) {
    let dim = DimensionalParams::table1();
    let (p, s) = nondimensionalize(&dim).unwrap();
    let x0 = s.state_to_dimensionless(&SystemState::new(9.0, 1.0, 9.0, 1.0, 0.1));
    let w = CostWeights { c, q: 1.0, r: 5.0, a: 5.0, u_max: 0.5, horizon: days }.to_dimensionless(&s);
    let opts = SweepOptions { grid_intervals: intervals, ..SweepOptions::default() }.to_dimensionless(&s);
    (p, w, x0, opts)
}
