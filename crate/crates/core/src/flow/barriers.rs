use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{ConstantsLedger, FlowProblem};
use crate::domain::TimeGrid;
use crate::ma_ops::{harmonic_extension, maximal_psh, solve_dirichlet, MaOperator, SolverOptions, ZeroRhs};
use crate::potentials::GridFunction;
use crate::Result;

#[derive(Clone, Debug)]
pub struct DirichletBarrier {
    pub u: GridFunction,
    /// Multiplier of `ρ`, `exp((κ + M_F)/n)`.
    pub a: f64,
    /// Time-Lipschitz constant of the lateral data used for `A`.
    pub kappa: f64,
}

/// Largest `|h(s, ζ) − h(t, ζ)| / |s − t|` over consecutive sample times in
/// `[0, S]` (time nodes plus a uniform sample) and all boundary hits.
fn lateral_lipschitz(problem: &FlowProblem, time: &TimeGrid) -> f64 {
    let grid = &problem.space;
    let dim = grid.dim();
    let mut times: Vec<f64> = time.nodes().to_vec();
    let count = 256;
    for j in 0..=count {
        times.push(problem.solve_to * j as f64 / count as f64);
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut best: f64 = 0.0;
    for hit in grid.hits() {
        let z = &hit.point[..dim];
        let mut prev = (problem.h.lateral)(times[0], z);
        for w in times.windows(2) {
            let next = (problem.h.lateral)(w[1], z);
            best = best.max((next - prev).abs() / (w[1] - w[0]));
            prev = next;
        }
    }
    best
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// `u(t, z) = φ_t(z) + h_0(z) + A ρ(z)` where `φ_t` is maximal
/// plurisubharmonic with boundary values `h_t − h_0`.
///
/// `A = exp((κ + M_F)/n)` with `κ` the larger of the declared `κ_h` and the
/// sampled time-Lipschitz constant of the lateral data.
pub fn sub_barrier_dirichlet(
    problem: &FlowProblem,
    time: Arc<TimeGrid>,
    op: &MaOperator,
    rho: &[f64],
    ledger: &ConstantsLedger,
    opts: &SolverOptions,
) -> Result<DirichletBarrier> {
    let grid = &problem.space;
    let dim = grid.dim();
    let n = grid.n() as f64;
    let kappa = problem.h.kappa_h.max(lateral_lipschitz(problem, &time));
    let a = ((kappa + ledger.m_f) / n).exp();
    let h0_nodes: Vec<f64> = (0..grid.len()).map(|i| (problem.h.initial)(grid.point(i))).collect();
    let h0_sphere: Vec<f64> = grid
        .hits()
        .iter()
        .map(|hit| (problem.h.initial)(&hit.point[..dim]))
        .collect();
    let mut slices = Vec::with_capacity(time.len());
    let mut prev: Option<(Vec<f64>, f64)> = None;
    for &t in time.nodes() {
        let lateral = problem.h.lateral_trace(grid, t);
        let phi_trace: Vec<f64> = lateral.iter().zip(&h0_sphere).map(|(h, h0)| h - h0).collect();
        let level = mean(&phi_trace);
        let phi = if phi_trace.iter().all(|v| v.abs() == 0.0) {
            alloc::vec![0.0; grid.len()]
        } else {
            match prev {
                Some((phi, old)) => {
                    let init = phi.iter().map(|v| v + level - old).collect();
                    solve_dirichlet(grid, op, &phi_trace, &ZeroRhs, init, opts)?.0
                }
                None => maximal_psh(grid, op, &phi_trace, opts)?.0,
            }
        };
        let nodes: Vec<f64> = (0..grid.len())
            .map(|i| phi[i] + h0_nodes[i] + a * rho[i])
            .collect();
        slices.push((nodes, lateral));
        prev = Some((phi, level));
    }
    Ok(DirichletBarrier {
        u: GridFunction::from_slices(grid.clone(), time, slices)?,
        a,
        kappa,
    })
}

/// `v(t, z) = h_0(z) + t(ρ(z) − C) + n[(t/T) log(t/T) − t/T]` with
/// `C = κ_h + M_F − min(n log T, 0)`.
pub fn sub_barrier_cauchy(
    problem: &FlowProblem,
    time: Arc<TimeGrid>,
    rho: &[f64],
    ledger: &ConstantsLedger,
) -> Result<GridFunction> {
    let grid = &problem.space;
    let dim = grid.dim();
    let n = grid.n() as f64;
    let horizon = problem.horizon;
    let c = ledger.kappa_h + ledger.m_f - (n * horizon.ln()).min(0.0);
    let tail = |t: f64| {
        if t == 0.0 {
            0.0
        } else {
            let s = t / horizon;
            n * (s * s.ln() - s)
        }
    };
    let slices = time
        .nodes()
        .iter()
        .map(|&t| {
            let nodes = (0..grid.len())
                .map(|i| (problem.h.initial)(grid.point(i)) + t * (rho[i] - c) + tail(t))
                .collect();
            let trace = grid
                .hits()
                .iter()
                .map(|hit| (problem.h.initial)(&hit.point[..dim]) - t * c + tail(t))
                .collect();
            (nodes, trace)
        })
        .collect();
    GridFunction::from_slices(grid.clone(), time, slices)
}

/// `H(t, ·)`: the discrete harmonic extension of `h_t` at every time node.
pub fn super_barrier(problem: &FlowProblem, time: Arc<TimeGrid>, opts: &SolverOptions) -> Result<GridFunction> {
    let grid = &problem.space;
    let laplacian = MaOperator::laplacian(grid);
    let mut slices: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(time.len());
    for &t in time.nodes() {
        let trace = problem.h.lateral_trace(grid, t);
        let nodes = match slices.last() {
            Some((prev, prev_trace)) => {
                let shift = mean(&trace) - mean(prev_trace);
                let init = prev.iter().map(|v| v + shift).collect();
                solve_dirichlet(grid, &laplacian, &trace, &ZeroRhs, init, opts)?.0
            }
            None => harmonic_extension(grid, &trace, opts)?.0,
        };
        slices.push((nodes, trace));
    }
    GridFunction::from_slices(grid.clone(), time, slices)
}
