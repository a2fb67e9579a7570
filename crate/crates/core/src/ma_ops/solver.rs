//! Nonlinear Dirichlet solver for `min_A Δ_A u = R(z, u)`.
//!
//! Each node's equation `Φ(v) = min_A (S_A − D_A v) − R(v) = 0` is concave
//! and strictly decreasing in the node value `v`, so Newton iterates started
//! where `Φ ≤ 0` decrease monotonically to the root. Nodes are visited in a
//! fixed order with over-relaxation (nonlinear SOR).

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::MaOperator;
use crate::domain::SpaceGrid;
use crate::potentials::Slice;
use crate::{Error, Result};

/// Right-hand side of the local equation, non-decreasing in the node value.
pub trait LocalRhs {
    /// Value and derivative with respect to `v` at `node`.
    fn eval(&self, node: usize, v: f64) -> (f64, f64);
}

pub struct ZeroRhs;

impl LocalRhs for ZeroRhs {
    fn eval(&self, _: usize, _: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// A fixed per-node value.
pub struct FixedRhs<'a>(pub &'a [f64]);

impl LocalRhs for FixedRhs<'_> {
    fn eval(&self, node: usize, _: f64) -> (f64, f64) {
        (self.0[node], 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverOptions {
    /// Stop once the largest node update of a sweep falls below this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Fixed relaxation factor; estimated from the grid when `None`.
    pub omega: Option<f64>,
    /// Keep the largest update of every sweep.
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_sweeps: 100_000,
            omega: None,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveStats {
    pub sweeps: usize,
    pub last_update: f64,
    pub omega: f64,
    pub history: Vec<f64>,
}

/// Root of `min_A (S_A − D_A v) = R(v)` near `v0`.
pub(crate) fn local_root<R: LocalRhs + ?Sized>(
    lines: &[(f64, f64)],
    rhs: &R,
    node: usize,
    v0: f64,
) -> f64 {
    let envelope = |v: f64| {
        let mut best = f64::INFINITY;
        let mut slope = 0.0;
        for &(s, d) in lines {
            let val = s - d * v;
            if val < best {
                best = val;
                slope = d;
            }
        }
        (best, slope)
    };
    let phi = |v: f64| {
        let (m, d) = envelope(v);
        let (r, dr) = rhs.eval(node, v);
        (m - r, -d - dr)
    };
    let (f0, _) = phi(v0);
    if f0 == 0.0 {
        return v0;
    }
    let r0 = rhs.eval(node, v0).0;
    let (mut lo, mut hi) = if f0 > 0.0 {
        // R(v) ≥ R(v0) to the right, so the active line at v0 bounds the root.
        let mut best = (f64::INFINITY, 1.0);
        for &(s, d) in lines {
            if s - d * v0 < best.0 {
                best = (s - d * v0, d);
            }
        }
        let (val, d) = best;
        (v0, v0 + (val - r0) / d)
    } else {
        let lo = lines
            .iter()
            .map(|&(s, d)| (s - r0) / d)
            .fold(f64::INFINITY, f64::min);
        (lo, v0)
    };
    let mut v = if f0 > 0.0 { hi } else { v0 };
    for _ in 0..200 {
        let (f, df) = phi(v);
        if f > 0.0 {
            lo = v;
        } else if f < 0.0 {
            hi = v;
        } else {
            return v;
        }
        let mut next = v - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - v).abs() <= 1e-13 * (1.0 + v.abs()) || hi - lo <= 1e-13 * (1.0 + v.abs()) {
            return next;
        }
        v = next;
    }
    v
}

/// First Dirichlet eigenvalue of `−Δ` on the unit ball of `ℝ^{2n}`.
fn first_eigenvalue(n: usize) -> f64 {
    match n {
        1 => 5.783_185_962_946_784,
        _ => 14.681_970_642_123_893,
    }
}

fn default_omega<R: LocalRhs + ?Sized>(grid: &SpaceGrid, rhs: &R, init: &[f64]) -> f64 {
    let h = grid.spacing();
    let diag = 1.0 / (h * h);
    let mu = first_eigenvalue(grid.n()) / (4.0 * grid.n() as f64);
    let mut reaction: Vec<f64> = (0..grid.len()).map(|i| rhs.eval(i, init[i]).1).collect();
    reaction.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let c = reaction.get(reaction.len() / 2).copied().unwrap_or(0.0).max(0.0);
    let rho = ((diag - mu) / (diag + c)).clamp(0.0, 1.0 - 1e-12);
    2.0 / (1.0 + (1.0 - rho * rho).sqrt())
}

/// Solves `min_A Δ_A u = R(u)` on the active nodes with `u = trace` at the
/// boundary hits.
pub fn solve_dirichlet<R: LocalRhs + ?Sized>(
    grid: &SpaceGrid,
    op: &MaOperator,
    trace: &[f64],
    rhs: &R,
    init: Vec<f64>,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    if trace.len() != grid.hits().len() {
        return Err(Error::GridMismatch("boundary trace length"));
    }
    if init.len() != grid.len() {
        return Err(Error::GridMismatch("initial guess length"));
    }
    if trace.iter().chain(init.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("solver input"));
    }
    let mut u = init;
    let mut omega = opts.omega.unwrap_or_else(|| default_omega(grid, rhs, &u));
    let mut stats = SolveStats {
        omega,
        ..SolveStats::default()
    };
    let mut parts = Vec::with_capacity(op.direction_count());
    let mut lines = Vec::with_capacity(op.len());
    let window = 200;
    let mut checkpoint = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        let mut max_update: f64 = 0.0;
        for node in 0..grid.len() {
            op.node_lines(grid, Slice::new(&u, trace), node, &mut parts, &mut lines);
            let v0 = u[node];
            let star = local_root(&lines, rhs, node, v0);
            let next = v0 + omega * (star - v0);
            max_update = max_update.max((next - v0).abs());
            u[node] = next;
        }
        if !max_update.is_finite() {
            return Err(Error::NonFinite("solver iterate"));
        }
        stats.sweeps = sweep;
        stats.last_update = max_update;
        if opts.record_history {
            stats.history.push(max_update);
        }
        if max_update < opts.tol {
            stats.omega = omega;
            return Ok((u, stats));
        }
        if sweep % window == 0 {
            if max_update > 0.5 * checkpoint && omega > 1.0 {
                omega = 1.0 + 0.5 * (omega - 1.0);
                log::debug!("sweep {sweep}: stalled at {max_update:e}, relaxation lowered to {omega}");
            }
            checkpoint = max_update;
        }
    }
    Err(Error::NonConvergence {
        sweeps: opts.max_sweeps,
        last_update: stats.last_update,
    })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Discrete harmonic function with the given values at the boundary hits.
pub fn harmonic_extension(
    grid: &SpaceGrid,
    trace: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let op = MaOperator::laplacian(grid);
    let init = alloc::vec![mean(trace); grid.len()];
    solve_dirichlet(grid, &op, trace, &ZeroRhs, init, opts)
}

/// Solution of `min_A Δ_A u = 0` with the given boundary values.
pub fn maximal_psh(
    grid: &SpaceGrid,
    op: &MaOperator,
    trace: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let init = alloc::vec![mean(trace); grid.len()];
    solve_dirichlet(grid, op, trace, &ZeroRhs, init, opts)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RhoReport {
    pub sup_norm: f64,
    /// `‖g‖_{L^p}^{1/n}` by lattice quadrature.
    pub g_lp_root: f64,
    /// `‖ρ‖_∞ / ‖g‖_{L^p}^{1/n}`, the observed constant of the `L^p` bound.
    pub observed_constant: f64,
    pub zero_density_nodes: usize,
    pub stats: SolveStats,
}

/// `ρ` with `min_A Δ_A ρ = g^{1/n}` and `ρ = 0` on the sphere.
pub fn solve_rho(
    grid: &SpaceGrid,
    op: &MaOperator,
    g: &[f64],
    p: f64,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, RhoReport)> {
    if g.len() != grid.len() {
        return Err(Error::GridMismatch("density length"));
    }
    if let Some((node, &value)) = g.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeDensity { node, value });
    }
    let n = grid.n() as f64;
    let zero_density_nodes = g.iter().filter(|v| **v == 0.0).count();
    if zero_density_nodes > 0 {
        log::info!("density vanishes at {zero_density_nodes} nodes");
    }
    let root: Vec<f64> = g.iter().map(|v| v.powf(1.0 / n)).collect();
    let trace = alloc::vec![0.0; grid.hits().len()];
    let init = alloc::vec![0.0; grid.len()];
    let (rho, stats) = solve_dirichlet(grid, op, &trace, &FixedRhs(&root), init, opts)?;
    let sup_norm = rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lp = if p.is_finite() {
        (g.iter().map(|v| v.powf(p)).sum::<f64>() * grid.cell_volume()).powf(1.0 / p)
    } else {
        g.iter().copied().fold(0.0, f64::max)
    };
    let g_lp_root = lp.powf(1.0 / n);
    Ok((
        rho,
        RhoReport {
            sup_norm,
            g_lp_root,
            observed_constant: if g_lp_root > 0.0 { sup_norm / g_lp_root } else { 0.0 },
            zero_density_nodes,
            stats,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Exp;
    impl LocalRhs for Exp {
        fn eval(&self, _: usize, v: f64) -> (f64, f64) {
            (v.exp(), v.exp())
        }
    }

    #[test]
    fn local_root_single_line() {
        // 3 − 2v = 0
        let v = local_root(&[(3.0, 2.0)], &ZeroRhs, 0, 10.0);
        assert!((v - 1.5).abs() < 1e-12);
        let v = local_root(&[(3.0, 2.0)], &ZeroRhs, 0, -10.0);
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn local_root_envelope_and_exponential() {
        let lines = [(3.0, 2.0), (2.0, 1.0), (5.0, 4.0)];
        for v0 in [-5.0, 0.0, 0.3, 4.0] {
            let v = local_root(&lines, &Exp, 0, v0);
            let env = lines.iter().map(|(s, d)| s - d * v).fold(f64::INFINITY, f64::min);
            assert!((env - v.exp()).abs() < 1e-11, "v0 = {v0}: {env} vs {}", v.exp());
        }
    }
}
