//! Implicit time stepping for the flow, the barriers, the constants ledger
//! and the residual, comparison and boundary reports.
//!
//! One implicit step from `u_prev` solves, at every active node,
//!
//! ```text
//!     min_A Δ_A u = g^{1/n} exp(((u − u_prev)/δt + F(t, z, u)) / n)
//! ```
//!
//! with the lateral data at `t` as Dirichlet values. The right side is
//! increasing in `u` and the left side decreasing in the centre value, so
//! the scheme is monotone.

mod barriers;
mod constants;
mod problem;
mod reports;

use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::domain::{SpaceGrid, TimeGrid};
use crate::ma_ops::{solve_dirichlet, solve_rho, LocalRhs, MaOperator, RhoReport, SolveStats, SolverOptions};
use crate::potentials::GridFunction;
use crate::{Error, Result};

pub use barriers::{sub_barrier_cauchy, sub_barrier_dirichlet, super_barrier, DirichletBarrier};
pub use constants::{compute_constants, ConstantsLedger};
pub use problem::{Density, FFamily, FSpec, FlowProblem};
pub use reports::{
    boundary_attainment_report, comparison_check, ordering_check, residual_field, sandwich_check,
    subsolution_residual, supersolution_residual, BoundaryReport, ComparisonReport, OrderReport,
    ResidualField, SandwichReport, SubsolutionReport, SupersolutionReport,
};

/// Largest exponent fed to `exp` in the local equations.
pub(crate) const EXP_CAP: f64 = 700.0;

/// Right side of one implicit step.
pub(crate) struct StepRhs<'a> {
    pub grid: &'a SpaceGrid,
    pub g_root: &'a [f64],
    pub prev: &'a [f64],
    pub t: f64,
    pub dt: f64,
    pub f: &'a FSpec,
}

impl LocalRhs for StepRhs<'_> {
    #[inline]
    fn eval(&self, node: usize, v: f64) -> (f64, f64) {
        let g = self.g_root[node];
        if g == 0.0 {
            return (0.0, 0.0);
        }
        let n = self.grid.n() as f64;
        let (fv, fr) = self.f.eval_with_slope(self.t, self.grid.point(node), v);
        let e = (((v - self.prev[node]) / self.dt + fv) / n).min(EXP_CAP);
        let r = g * e.exp();
        (r, r * (1.0 / self.dt + fr) / n)
    }
}

/// One implicit step: the slice at `t` from the slice `prev` one step `dt` earlier.
#[allow(clippy::too_many_arguments)]
pub fn step_implicit(
    problem: &FlowProblem,
    op: &MaOperator,
    g_root: &[f64],
    prev: &[f64],
    t: f64,
    dt: f64,
    trace: &[f64],
    init: Vec<f64>,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidTimeGrid(alloc::format!("non-positive step {dt}")));
    }
    let rhs = StepRhs {
        grid: &problem.space,
        g_root,
        prev,
        t,
        dt,
        f: &problem.f,
    };
    solve_dirichlet(&problem.space, op, trace, &rhs, init, opts)
}

#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub u: GridFunction,
    pub rho: Vec<f64>,
    pub rho_report: RhoReport,
    pub ledger: ConstantsLedger,
    pub steps: Vec<SolveStats>,
}

/// Solves `min_A Δ_A ρ = g^{1/n}` with zero boundary values.
pub fn solve_problem_rho(
    problem: &FlowProblem,
    op: &MaOperator,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, RhoReport)> {
    solve_rho(&problem.space, op, problem.g.values(), problem.g.p(), opts)
}

/// Marches the implicit scheme from `h_0` over the time grid.
pub fn solve_flow(
    problem: &FlowProblem,
    time: Arc<TimeGrid>,
    op: &MaOperator,
    opts: &SolverOptions,
) -> Result<FlowSolution> {
    if time.last() > problem.solve_to * (1.0 + 1e-12) || time.horizon() != problem.horizon {
        return Err(Error::GridMismatch("time grid does not match the problem horizon"));
    }
    let grid = &problem.space;
    let (rho, rho_report) = solve_problem_rho(problem, op, opts)?;
    let ledger = compute_constants(problem, &time, &rho_report);
    let g_root = problem.g.root(grid.n());

    let (u0, trace0) = problem.h.initial_slice(grid);
    let mut slices = Vec::with_capacity(time.len());
    slices.push((u0, trace0));
    let mut steps = Vec::with_capacity(time.steps());
    for k in 0..time.steps() {
        let t = time.t(k + 1);
        let dt = time.step(k);
        let trace = problem.h.lateral_trace(grid, t);
        let prev = &slices[k].0;
        let init = if k == 0 {
            prev.clone()
        } else {
            let older = &slices[k - 1].0;
            let r = dt / time.step(k - 1);
            prev.iter().zip(older).map(|(a, b)| a + r * (a - b)).collect()
        };
        let (next, stats) = step_implicit(problem, op, &g_root, prev, t, dt, &trace, init, opts)?;
        log::debug!("t = {t:.6}: {} sweeps, last update {:e}", stats.sweeps, stats.last_update);
        steps.push(stats);
        slices.push((next, trace));
    }
    let u = GridFunction::from_slices(problem.space.clone(), time, slices)?;
    Ok(FlowSolution {
        u,
        rho,
        rho_report,
        ledger,
        steps,
    })
}
