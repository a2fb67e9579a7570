use std::sync::Arc;

use pluriflow_core::flow::{
    comparison_check, compute_constants, solve_flow, solve_problem_rho, sub_barrier_cauchy, Density, FSpec,
    FlowProblem,
};
use pluriflow_core::ma_ops::SolverOptions;
use pluriflow_core::{BallDomain, BoundaryData, HermitianDictionary, MaOperator, SpaceGrid, TimeGrid};

fn disc(h: f64) -> Arc<SpaceGrid> {
    Arc::new(SpaceGrid::build(BallDomain::new(1).unwrap(), h).unwrap())
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `h = 2|z|² + t log 2 + shift` on the sphere and at `t = 0`.
fn boundary(shift: f64) -> BoundaryData {
    let l2 = 2f64.ln();
    BoundaryData::new(
        move |t, x| 2.0 * norm2(x) + t * l2 + shift,
        move |x| 2.0 * norm2(x) + shift,
        l2,
        0.0,
    )
}

fn problem(space: &Arc<SpaceGrid>, g: f64, f: FSpec, shift: f64, solve_to: f64) -> FlowProblem {
    let g = Density::constant(space, g).unwrap();
    FlowProblem::new(space.clone(), 1.0, solve_to, g, f, boundary(shift)).unwrap()
}

fn op(space: &SpaceGrid) -> MaOperator {
    MaOperator::new(space, &HermitianDictionary::standard(1).unwrap()).unwrap()
}

#[test]
fn manufactured_disc_is_reproduced_to_solver_precision() {
    let space = disc(1.0 / 16.0);
    let time = Arc::new(TimeGrid::uniform(1.0, 0.75, 24).unwrap());
    let p = problem(&space, 1.0, FSpec::zero(), 0.0, 0.75);
    let sol = solve_flow(&p, time.clone(), &op(&space), &SolverOptions::default()).unwrap();
    let l2 = 2f64.ln();
    let mut err: f64 = 0.0;
    for k in 0..time.len() {
        for i in 0..space.len() {
            let exact = 2.0 * norm2(space.point(i)) + time.t(k) * l2;
            err = err.max((sol.u.value(k, i) - exact).abs());
        }
    }
    assert!(err < 1e-8, "error {err:e}");
    assert!((sol.ledger.m_h - (2.0 + l2)).abs() < 1e-9);
}

#[test]
fn raising_boundary_data_raises_the_solution() {
    let space = disc(0.125);
    let time = Arc::new(TimeGrid::uniform(1.0, 0.75, 12).unwrap());
    let f = FSpec::affine(1.0, 0.0, |_| 0.0).unwrap();
    let o = op(&space);
    let opts = SolverOptions::default();
    let low = solve_flow(&problem(&space, 1.0, f.clone(), 0.0, 0.75), time.clone(), &o, &opts).unwrap();
    let high = solve_flow(&problem(&space, 1.0, f, 0.1, 0.75), time, &o, &opts).unwrap();
    let gap = high.u.difference(&low.u).unwrap();
    assert!(gap.values().iter().all(|d| *d >= -1e-9));
    // With F = r the shift is damped, never amplified.
    assert!(gap.values().iter().all(|d| *d <= 0.1 + 1e-9));
}

#[test]
fn raising_the_density_lowers_the_solution() {
    let space = disc(0.125);
    let time = Arc::new(TimeGrid::uniform(1.0, 0.75, 12).unwrap());
    let o = op(&space);
    let opts = SolverOptions::default();
    let small = solve_flow(&problem(&space, 1.0, FSpec::zero(), 0.0, 0.75), time.clone(), &o, &opts).unwrap();
    let large = solve_flow(&problem(&space, 2.0, FSpec::zero(), 0.0, 0.75), time, &o, &opts).unwrap();
    let gap = large.u.difference(&small.u).unwrap();
    assert!(gap.values().iter().all(|d| *d <= 1e-9));
    assert!(gap.values().iter().any(|d| *d < -1e-3));
}

#[test]
fn extending_the_horizon_reproduces_the_shorter_run() {
    let space = disc(0.125);
    let f = FSpec::affine(1.0, 0.0, |_| 0.0).unwrap();
    let o = op(&space);
    let opts = SolverOptions::default();
    let short_time = Arc::new(TimeGrid::uniform(1.0, 0.5, 8).unwrap());
    let long_time = Arc::new(TimeGrid::uniform(1.0, 0.75, 12).unwrap());
    let short = solve_flow(&problem(&space, 1.0, f.clone(), 0.0, 0.5), short_time.clone(), &o, &opts).unwrap();
    let long = solve_flow(&problem(&space, 1.0, f, 0.0, 0.75), long_time.clone(), &o, &opts).unwrap();
    for k in 0..short_time.len() {
        assert!((short_time.t(k) - long_time.t(k)).abs() < 1e-15);
        for i in 0..space.len() {
            assert!((short.u.value(k, i) - long.u.value(k, i)).abs() < 1e-9);
        }
    }
}

#[test]
fn cauchy_barrier_lies_below_the_solution() {
    let space = disc(0.125);
    let time = Arc::new(TimeGrid::uniform(1.0, 0.75, 12).unwrap());
    let p = problem(&space, 1.0, FSpec::zero(), 0.0, 0.75);
    let o = op(&space);
    let opts = SolverOptions::default();
    let sol = solve_flow(&p, time.clone(), &o, &opts).unwrap();
    let (rho, report) = solve_problem_rho(&p, &o, &opts).unwrap();
    let ledger = compute_constants(&p, &time, &report);
    let phi = sub_barrier_cauchy(&p, time, &rho, &ledger).unwrap();
    let r = comparison_check(&phi, &sol.u, &p, &o, 1e-5, 1e-9).unwrap();
    assert!(r.preconditions_met, "{:?}", r.failures);
    assert!(r.pass);
}
