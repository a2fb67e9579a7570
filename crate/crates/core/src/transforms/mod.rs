//! Structural transforms of solutions: time scaling, semi-concavity
//! averaging, Walsh translation and Möbius averaging.
//!
//! Each transform builds a new grid function from a solution `U` and
//! reports how far it stays below `U`. Off-grid values come from the
//! interpolants in [`interp`], and the report tolerances include an
//! interpolation allowance estimated from the measured second differences.

pub mod interp;
mod mobius;
mod walsh;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::flow::{subsolution_residual, ConstantsLedger, FlowProblem, SubsolutionReport};
use crate::ma_ops::{second_difference, MaOperator};
use crate::potentials::{second_time_difference, GridFunction};
use crate::{Error, Result};

pub use interp::{multilinear, Interpolant, SliceInterpolant};
pub use mobius::{mobius_average, mobius_jacobian_log, mobius_map, MobiusConstants, MobiusReport};
pub use walsh::{measure_moduli, moduli_from_barriers, walsh_translate, Moduli, WalshReport};

/// Dominance of a transformed function below a reference solution.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransformReport {
    pub transform: String,
    /// `min (U − v)` over active nodes and the compared time nodes.
    pub margin: f64,
    /// `(k, node)` of the minimum.
    pub worst: (usize, usize),
    /// Constant inserted by the transform.
    pub constant: f64,
    pub tol: f64,
    /// Subsolution residual of the transformed function, when requested.
    pub residual: Option<SubsolutionReport>,
    pub pass: bool,
}

impl TransformReport {
    fn dominance(transform: &str, v: &GridFunction, reference: &GridFunction, constant: f64, tol: f64) -> Result<Self> {
        if v.space().len() != reference.space().len() || v.time().len() > reference.time().len() {
            return Err(Error::GridMismatch("transform and reference grids differ"));
        }
        let mut margin = f64::INFINITY;
        let mut worst = (0, 0);
        for k in 0..v.time().len() {
            if (v.time().t(k) - reference.time().t(k)).abs() > 1e-12 {
                return Err(Error::GridMismatch("transform and reference time nodes differ"));
            }
            for i in 0..v.space().len() {
                let m = reference.value(k, i) - v.value(k, i);
                if m < margin {
                    margin = m;
                    worst = (k, i);
                }
            }
        }
        Ok(TransformReport {
            transform: transform.into(),
            margin,
            worst,
            constant,
            tol,
            residual: None,
            pass: margin >= -tol,
        })
    }

    /// Attaches the subsolution residual of `v` and folds it into the verdict.
    pub fn with_residual(
        mut self,
        v: &GridFunction,
        problem: &FlowProblem,
        op: &MaOperator,
        tol_pde: f64,
        tol_bc: f64,
    ) -> Self {
        let report = subsolution_residual(v, problem, op, tol_pde, tol_bc);
        self.pass &= report.pass;
        self.residual = Some(report);
        self
    }
}

/// `max |D²_p u|` over nodes, axes and time nodes.
pub fn max_axis_curvature(u: &GridFunction) -> f64 {
    let grid = u.space();
    let mut best: f64 = 0.0;
    for k in 0..u.time().len() {
        let slice = u.slice(k);
        for node in 0..grid.len() {
            for p in 0..grid.dim() {
                best = best.max(second_difference(grid, slice, node, p).abs());
            }
        }
    }
    best
}

/// `max |∂²_t u|` from second time differences, 0 with fewer than three nodes.
pub fn max_time_curvature(u: &GridFunction) -> f64 {
    let time = u.time();
    let mut best: f64 = 0.0;
    for k in 1..time.len().saturating_sub(1) {
        let t = [time.t(k - 1), time.t(k), time.t(k + 1)];
        for i in 0..u.space().len() {
            let d = second_time_difference(t, [u.value(k - 1, i), u.value(k, i), u.value(k + 1, i)]);
            best = best.max(d.abs());
        }
    }
    best
}

/// Floor of every transform tolerance, covering solver and rounding error.
pub const BASE_TOL: f64 = 1e-6;

/// Allowance for spatial interpolation, `C_interp h²` with
/// `C_interp = max |D²_p u| / 8`.
pub fn space_interp_tol(u: &GridFunction) -> f64 {
    let h = u.space().spacing();
    max_axis_curvature(u) * h * h / 8.0
}

/// Allowance for linear interpolation in time, `max|∂²_t u| δt² / 8`.
pub fn time_interp_tol(u: &GridFunction) -> f64 {
    let dt = u.time().max_step();
    max_time_curvature(u) * dt * dt / 8.0
}

/// Number of leading time nodes `t_k` with every `t_k · factor` inside the grid.
fn reachable_prefix(u: &GridFunction, factor: f64) -> usize {
    let last = u.time().last() * (1.0 + 1e-12);
    u.time().nodes().iter().take_while(|&&t| t * factor <= last).count()
}

/// Builds a function on the first `count` time nodes from a per-node rule
/// `(t, node) -> value` and a per-hit rule `(t, hit) -> value`.
fn tabulate(
    u: &GridFunction,
    count: usize,
    node_rule: impl Fn(f64, usize) -> Option<f64>,
    hit_rule: impl Fn(f64, usize) -> Option<f64>,
) -> Result<GridFunction> {
    let grid = u.space();
    let time = Arc::new(u.time().prefix(count)?);
    let mut slices = Vec::with_capacity(count);
    for &t in time.nodes() {
        let nodes = (0..grid.len())
            .map(|i| node_rule(t, i).ok_or_else(|| Error::OutOfRange(alloc::format!("time {t} leaves the grid"))))
            .collect::<Result<Vec<_>>>()?;
        let trace = (0..grid.hits().len())
            .map(|i| hit_rule(t, i).ok_or_else(|| Error::OutOfRange(alloc::format!("time {t} leaves the grid"))))
            .collect::<Result<Vec<_>>>()?;
        slices.push((nodes, trace));
    }
    GridFunction::from_slices(grid.clone(), time, slices)
}

/// `v^s(t, z) = s⁻¹ u(st, z) − C|s − 1|(t + 1)` with
/// `C = 2M_U + 2κ_h + 2n + κ_F(T + M_U)`, on the time nodes with `st` inside
/// the grid.
pub fn time_scale(u: &GridFunction, s: f64, ledger: &ConstantsLedger) -> Result<(GridFunction, f64)> {
    if !(s >= 0.5) || !s.is_finite() {
        return Err(Error::OutOfRange(alloc::format!("scale {s} below 1/2")));
    }
    let c = ledger.time_scale_constant(u.space().n(), u.time().horizon());
    let count = reachable_prefix(u, s);
    if count < 2 {
        return Err(Error::OutOfRange(alloc::format!("scale {s} leaves no time node on the grid")));
    }
    let it = Interpolant::new(u);
    let shift = |t: f64| c * (s - 1.0).abs() * (t + 1.0);
    let v = tabulate(
        u,
        count,
        |t, i| it.at_node(s * t, i).map(|x| x / s - shift(t)),
        |t, i| it.trace_at(s * t, i).map(|x| x / s - shift(t)),
    )?;
    Ok((v, c))
}

/// [`time_scale`] with its dominance report against `reference`.
pub fn time_scale_report(
    u: &GridFunction,
    reference: &GridFunction,
    s: f64,
    ledger: &ConstantsLedger,
) -> Result<(GridFunction, TransformReport)> {
    let (v, c) = time_scale(u, s, ledger)?;
    let tol = BASE_TOL + time_interp_tol(u) / s;
    let report = TransformReport::dominance("time_scale", &v, reference, c, tol)?;
    Ok((v, report))
}

/// `½(s⁻¹U(st, z) + sU(t/s, z)) − C(t + 1)(s − 1)²` with `C` the
/// semi-concavity constant, on the time nodes with `st` inside the grid.
pub fn semiconcavity_average(u: &GridFunction, s: f64, ledger: &ConstantsLedger) -> Result<(GridFunction, f64)> {
    if !(s >= 1.0) || !s.is_finite() {
        return Err(Error::OutOfRange(alloc::format!("averaging scale {s} below 1")));
    }
    let c = ledger.semiconcavity_constant(u.time().horizon());
    let count = reachable_prefix(u, s);
    if count < 2 {
        return Err(Error::OutOfRange(alloc::format!("scale {s} leaves no time node on the grid")));
    }
    let it = Interpolant::new(u);
    let shift = |t: f64| c * (t + 1.0) * (s - 1.0) * (s - 1.0);
    let combine = |a: Option<f64>, b: Option<f64>, t: f64| Some(0.5 * (a? / s + s * b?) - shift(t));
    let v = tabulate(
        u,
        count,
        |t, i| combine(it.at_node(s * t, i), it.at_node(t / s, i), t),
        |t, i| combine(it.trace_at(s * t, i), it.trace_at(t / s, i), t),
    )?;
    Ok((v, c))
}

/// [`semiconcavity_average`] with its dominance report against `reference`.
pub fn semiconcavity_average_report(
    u: &GridFunction,
    reference: &GridFunction,
    s: f64,
    ledger: &ConstantsLedger,
) -> Result<(GridFunction, TransformReport)> {
    let (v, c) = semiconcavity_average(u, s, ledger)?;
    let tol = BASE_TOL + time_interp_tol(u) * (s + 1.0 / s) / 2.0;
    let report = TransformReport::dominance("semiconcave_avg", &v, reference, c, tol)?;
    Ok((v, report))
}
