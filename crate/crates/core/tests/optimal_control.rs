use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sirsilv::control::{
    adjoint_field, forward_state, gradient_check, hamiltonian, objective, sweep_solve, AdjointState, Bump,
    ControlSignal, CostWeights, SweepOptions, SweepResult,
};
use sirsilv::model::I_H;
use sirsilv::{nondimensionalize, DimensionalParams, DimensionlessParams, Scales, SystemState, Trajectory};

struct Scenario {
    p: DimensionlessParams,
    s: Scales,
    w: CostWeights,
    x0: SystemState,
    opts: SweepOptions,
}

fn scenario(c: f64, days: f64, intervals: usize) -> Scenario {
    let (p, s) = nondimensionalize(&DimensionalParams::table1()).unwrap();
    Scenario {
        p,
        s,
        w: CostWeights { c, q: 1.0, r: 5.0, a: 5.0, u_max: 0.5, horizon: days }.to_dimensionless(&s),
        x0: s.state_to_dimensionless(&SystemState::new(9.0, 1.0, 9.0, 1.0, 0.1)),
        opts: SweepOptions { grid_intervals: intervals, ..SweepOptions::default() }.to_dimensionless(&s),
    }
}

impl Scenario {
    fn solve(&self) -> SweepResult {
        sweep_solve(&self.p, &self.w, &self.x0, &self.opts).unwrap()
    }

    fn uncontrolled(&self) -> (ControlSignal, Trajectory<5>) {
        let zero = ControlSignal::constant(self.w.horizon, self.opts.grid_intervals, 0.0, self.w.u_max).unwrap();
        let tr = forward_state(&self.p, &self.x0, &zero, &self.opts.solver).unwrap();
        (zero, tr)
    }
}

fn cumulative_infected(tr: &Trajectory<5>, u: &ControlSignal) -> f64 {
    let w = CostWeights { c: 0.0, q: 0.0, r: 1.0, a: 0.0, u_max: u.u_max(), horizon: u.horizon() };
    objective(tr, u, &w).unwrap()
}

#[test]
fn adjoint_is_minus_state_gradient_of_hamiltonian() {
    let (p, _) = nondimensionalize(&DimensionalParams::table1()).unwrap();
    let w = CostWeights { c: 1.0, q: 1.0, r: 5.0, a: 5.0, u_max: 2.0, horizon: 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let x: [f64; 5] = std::array::from_fn(|_| rng.random_range(0.01..3.0));
        let pv: [f64; 5] = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
        let u = rng.random_range(0.0..w.u_max);
        let field = adjoint_field(&pv, &x, &p, w.r);
        let h = |y: [f64; 5]| hamiltonian(&SystemState::from_array(y), u, &AdjointState::from_array(pv), &p, &w).unwrap();
        for i in 0..5 {
            let step = 1e-5 * (1.0 + x[i].abs());
            let (mut xp, mut xm) = (x, x);
            xp[i] += step;
            xm[i] -= step;
            let fd = -(h(xp) - h(xm)) / (2.0 * step);
            let scale = field[i].abs().max(1.0);
            assert!((fd - field[i]).abs() <= 1e-6 * scale, "component {i}: {fd} vs {}", field[i]);
        }
    }
}

#[test]
fn short_horizon_release_mitigates_the_outbreak() {
    let sc = scenario(1.0, 30.0, 500);
    let res = sc.solve();
    assert!(res.converged && res.iterations <= 200);
    let (zero, base) = sc.uncontrolled();
    let j0 = objective(&base, &zero, &sc.w).unwrap();
    assert!(res.objective() < j0);
    let grid = zero.times();
    let peak = |tr: &Trajectory<5>| tr.sample(&grid).unwrap().iter().map(|y| y[I_H]).fold(0.0, f64::max);
    assert!(peak(&res.state) < peak(&base));
    assert!(cumulative_infected(&res.state, &res.control) < cumulative_infected(&base, &zero));
    assert!(res.state.values().iter().flatten().all(|v| *v >= -1e-9 && v.is_finite()));
}

#[test]
fn linear_cost_gives_bang_bang_release() {
    let sc = scenario(0.0, 120.0, 2000);
    let res = sc.solve();
    assert!(res.converged);
    let u_max = sc.s.control_to_dimensional(sc.w.u_max);
    let extreme = res
        .control
        .values()
        .iter()
        .map(|&u| sc.s.control_to_dimensional(u))
        .filter(|u| u.abs() <= 1e-6 || (u - u_max).abs() <= 1e-6)
        .count();
    assert!(extreme as f64 >= 0.99 * res.control.values().len() as f64, "{extreme} extreme nodes");
}

#[test]
fn adjoint_gradient_matches_finite_differences_on_interior_arc() {
    let sc = scenario(1.0, 30.0, 500);
    let res = sc.solve();
    let u = res.control.values();
    let t = res.control.times();
    let delta = 0.01 * sc.w.u_max;
    let interior: Vec<usize> = (0..u.len()).filter(|&i| u[i] > delta && u[i] < sc.w.u_max - delta).collect();
    assert!(interior.len() >= 3, "no interior arc");
    let bump = Bump { t1: t[interior[0]], t2: t[*interior.last().unwrap()], eps: sc.s.control_to_dimensionless(1e-5) };
    let rep = gradient_check(&res.control, &sc.p, &sc.w, &sc.x0, bump, &sc.opts.solver).unwrap();
    assert!(rep.relative_discrepancy < 1e-3, "{rep:?}");
    assert!(rep.adjoint.abs() <= 1e-4 * (bump.t2 - bump.t1), "{rep:?}");

    // away from the optimum the derivative is far from zero and still matches
    let off = ControlSignal::constant(sc.w.horizon, 500, 0.3 * sc.w.u_max, sc.w.u_max).unwrap();
    let bump = Bump { t1: 0.2 * sc.w.horizon, t2: 0.4 * sc.w.horizon, eps: bump.eps };
    let rep = gradient_check(&off, &sc.p, &sc.w, &sc.x0, bump, &sc.opts.solver).unwrap();
    assert!(rep.relative_discrepancy < 1e-3 && rep.adjoint.abs() > 1e-3 * rep.term_scale, "{rep:?}");
}

#[test]
fn refining_the_grid_barely_moves_the_optimum() {
    let coarse = scenario(1.0, 30.0, 500).solve();
    let fine = scenario(1.0, 30.0, 1000).solve();
    let (a, b) = (coarse.objective(), fine.objective());
    assert!((a - b).abs() < 1e-4 * b.abs(), "{a} vs {b}");
}

#[test]
fn objective_history_best_so_far_is_monotone() {
    let res = scenario(1.0, 120.0, 2000).solve();
    assert!(res.converged);
    assert!(res.best_so_far().windows(2).all(|w| w[1] <= w[0]));
    assert!(res.law_residual.is_finite());
}
