use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{ConstantsLedger, FlowProblem, EXP_CAP};
use crate::domain::Neighbor;
use crate::ma_ops::MaOperator;
use crate::potentials::{time_semiconcavity_estimate, GridFunction};
use crate::Result;

/// `ma_root(u_k) − [e^{D_t u + F(t_k, z, u_k)} g]^{1/n}` at every time node
/// `k ≥ 1` (backward differences) and, separately, at `k = 0` with the
/// forward difference.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualField {
    /// `values[k − 1][node]` for `k = 1..=K`.
    pub values: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

fn residual_slice(
    u: &GridFunction,
    problem: &FlowProblem,
    op: &MaOperator,
    g_root: &[f64],
    k: usize,
    other: usize,
) -> Vec<f64> {
    let grid = u.space();
    let n = grid.n() as f64;
    let time = u.time();
    let (t, dt) = (time.t(k), time.t(k.max(other)) - time.t(k.min(other)));
    let root = op.ma_root(grid, u.slice(k));
    let (late, early) = if other > k {
        (u.nodes_at(other), u.nodes_at(k))
    } else {
        (u.nodes_at(k), u.nodes_at(other))
    };
    let cur = u.nodes_at(k);
    (0..grid.len())
        .map(|i| {
            let dtu = (late[i] - early[i]) / dt;
            let f = problem.f.eval(t, grid.point(i), cur[i]);
            let rhs = if g_root[i] == 0.0 {
                0.0
            } else {
                g_root[i] * ((dtu + f) / n).min(EXP_CAP).exp()
            };
            root[i] - rhs
        })
        .collect()
}

pub fn residual_field(u: &GridFunction, problem: &FlowProblem, op: &MaOperator) -> ResidualField {
    let g_root = problem.g.root(u.space().n());
    let steps = u.time().steps();
    let values = (1..=steps)
        .map(|k| residual_slice(u, problem, op, &g_root, k, k - 1))
        .collect();
    let initial = residual_slice(u, problem, op, &g_root, 0, 1);
    ResidualField { values, initial }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubsolutionReport {
    /// Most negative residual over `k ≥ 1` and all nodes.
    pub min_residual: f64,
    pub worst: (usize, usize),
    /// Most negative residual at `k = 0` with the forward difference; not
    /// part of the verdict.
    pub initial_min_residual: f64,
    /// `max` of `u − h` over the lateral trace and of `u(0, ·) − h_0`.
    pub boundary_excess: f64,
    pub tol_pde: f64,
    pub tol_bc: f64,
    pub pass: bool,
}

fn extremes(field: &ResidualField) -> (f64, (usize, usize), f64, (usize, usize)) {
    let mut min = (f64::INFINITY, (0, 0));
    let mut max = (f64::NEG_INFINITY, (0, 0));
    for (j, row) in field.values.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            if *v < min.0 {
                min = (*v, (j + 1, i));
            }
            if *v > max.0 {
                max = (*v, (j + 1, i));
            }
        }
    }
    (min.0, min.1, max.0, max.1)
}

/// Largest excess of `u` over the parabolic boundary data.
pub(crate) fn boundary_excess(u: &GridFunction, problem: &FlowProblem) -> f64 {
    let grid = u.space();
    let mut excess = f64::NEG_INFINITY;
    for (k, &t) in u.time().nodes().iter().enumerate() {
        let h = problem.h.lateral_trace(grid, t);
        for (a, b) in u.trace_at(k).iter().zip(&h) {
            excess = excess.max(a - b);
        }
    }
    for i in 0..grid.len() {
        excess = excess.max(u.value(0, i) - (problem.h.initial)(grid.point(i)));
    }
    excess
}

pub fn subsolution_residual(
    u: &GridFunction,
    problem: &FlowProblem,
    op: &MaOperator,
    tol_pde: f64,
    tol_bc: f64,
) -> SubsolutionReport {
    let field = residual_field(u, problem, op);
    subsolution_from_field(u, problem, &field, tol_pde, tol_bc)
}

pub(crate) fn subsolution_from_field(
    u: &GridFunction,
    problem: &FlowProblem,
    field: &ResidualField,
    tol_pde: f64,
    tol_bc: f64,
) -> SubsolutionReport {
    let (min_residual, worst, _, _) = extremes(field);
    let initial_min_residual = field.initial.iter().copied().fold(f64::INFINITY, f64::min);
    let boundary_excess = boundary_excess(u, problem);
    SubsolutionReport {
        min_residual,
        worst,
        initial_min_residual,
        boundary_excess,
        tol_pde,
        tol_bc,
        pass: min_residual >= -tol_pde && boundary_excess <= tol_bc,
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupersolutionReport {
    /// Largest residual over `k ≥ 1` and all nodes.
    pub max_residual: f64,
    pub worst: (usize, usize),
    pub tol_pde: f64,
    pub pass: bool,
}

pub fn supersolution_residual(
    u: &GridFunction,
    problem: &FlowProblem,
    op: &MaOperator,
    tol_pde: f64,
) -> SupersolutionReport {
    let field = residual_field(u, problem, op);
    supersolution_from_field(&field, tol_pde)
}

pub(crate) fn supersolution_from_field(field: &ResidualField, tol_pde: f64) -> SupersolutionReport {
    let (_, _, max_residual, worst) = extremes(field);
    SupersolutionReport {
        max_residual,
        worst,
        tol_pde,
        pass: max_residual <= tol_pde,
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderReport {
    /// `max` over nodes and times of `lower − upper`.
    pub max_excess: f64,
    pub worst: (usize, usize),
    pub tol: f64,
    pub pass: bool,
}

/// Checks `lower ≤ upper + tol` at every node and time.
pub fn ordering_check(lower: &GridFunction, upper: &GridFunction, tol: f64) -> Result<OrderReport> {
    let d = lower.difference(upper)?;
    let per = lower.space().len();
    let (mut max_excess, mut worst) = (f64::NEG_INFINITY, (0, 0));
    for (j, v) in d.values().iter().enumerate() {
        if *v > max_excess {
            max_excess = *v;
            worst = (j / per, j % per);
        }
    }
    Ok(OrderReport {
        max_excess,
        worst,
        tol,
        pass: max_excess <= tol,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SandwichReport {
    /// `min` of `U − (Bρ − M_h)`.
    pub lower_margin: f64,
    /// `min` of `M_h − U`.
    pub upper_margin: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `B ρ − M_h − tol ≤ U ≤ M_h + tol` nodewise.
pub fn sandwich_check(u: &GridFunction, rho: &[f64], ledger: &ConstantsLedger, tol: f64) -> SandwichReport {
    let per = u.space().len();
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for (j, v) in u.values().iter().enumerate() {
        lower_margin = lower_margin.min(v - (ledger.b * rho[j % per] - ledger.m_h));
        upper_margin = upper_margin.min(ledger.m_h - v);
    }
    SandwichReport {
        lower_margin,
        upper_margin,
        tol,
        pass: lower_margin >= -tol && upper_margin >= -tol,
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonReport {
    pub preconditions_met: bool,
    pub failures: Vec<String>,
    /// `max` over nodes and times of `Φ − Ψ`.
    pub max_difference: f64,
    pub tol_cmp: f64,
    pub pass: bool,
}

/// Checks `Φ ≤ Ψ` for a subsolution `Φ` and a supersolution `Ψ` of the same
/// equation whose boundary values are ordered.
pub fn comparison_check(
    phi: &GridFunction,
    psi: &GridFunction,
    problem: &FlowProblem,
    op: &MaOperator,
    tol_pde: f64,
    tol_cmp: f64,
) -> Result<ComparisonReport> {
    let mut failures = Vec::new();
    let sub = residual_field(phi, problem, op);
    let (min_sub, _, _, _) = extremes(&sub);
    if min_sub < -tol_pde {
        failures.push(alloc::format!("Φ is not a subsolution: residual {min_sub:e}"));
    }
    let sup = residual_field(psi, problem, op);
    let (_, _, max_sup, _) = extremes(&sup);
    if max_sup > tol_pde {
        failures.push(alloc::format!("Ψ is not a supersolution: residual {max_sup:e}"));
    }
    let trace_gap = phi
        .trace()
        .iter()
        .zip(psi.trace())
        .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
    let initial_gap = phi
        .nodes_at(0)
        .iter()
        .zip(psi.nodes_at(0))
        .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
    let gap = trace_gap.max(initial_gap);
    if gap > 1e-12 {
        failures.push(alloc::format!("boundary data not ordered: h_Φ − h_Ψ reaches {gap:e}"));
    }
    match time_semiconcavity_estimate(psi) {
        Ok(c) if c.is_finite() => {}
        _ => failures.push(String::from("Ψ has no finite semi-concavity estimate")),
    }
    let max_difference = phi.difference(psi)?.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let preconditions_met = failures.is_empty();
    Ok(ComparisonReport {
        preconditions_met,
        failures,
        max_difference,
        tol_cmp,
        pass: preconditions_met && max_difference <= tol_cmp,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryReport {
    /// `max` over `k ≥ 1` and boundary hits of `|U(t_k, node) − h(t_k, ζ)|`,
    /// with `node` the active node the hit belongs to.
    pub lateral_max_error: f64,
    /// `(t_k, ‖U(t_k, ·) − h_0‖_{L¹})` for the first few time nodes.
    pub initial_l1: Vec<(f64, f64)>,
    /// Least-squares slope of `log error` against `log t_k`.
    pub initial_decay_rate: f64,
    pub tol_lateral: f64,
    pub tol_initial: f64,
    pub pass: bool,
}

pub fn boundary_attainment_report(
    u: &GridFunction,
    problem: &FlowProblem,
    tol_lateral: f64,
    tol_initial: f64,
) -> BoundaryReport {
    let grid = u.space();
    let time = u.time();
    let mut lateral_max_error: f64 = 0.0;
    for k in 1..time.len() {
        let h = problem.h.lateral_trace(grid, time.t(k));
        for (i, hit) in grid.hits().iter().enumerate() {
            debug_assert!(matches!(grid.neighbor(hit.node, hit.direction), Neighbor::Hit(j) if j == i));
            lateral_max_error = lateral_max_error.max((u.value(k, hit.node) - h[i]).abs());
        }
    }
    let cell = grid.cell_volume();
    let h0: Vec<f64> = (0..grid.len()).map(|i| (problem.h.initial)(grid.point(i))).collect();
    let initial_l1: Vec<(f64, f64)> = (1..time.len().min(5))
        .map(|k| {
            let e = u.nodes_at(k).iter().zip(&h0).map(|(a, b)| (a - b).abs()).sum::<f64>() * cell;
            (time.t(k), e)
        })
        .collect();
    let pts: Vec<(f64, f64)> = initial_l1
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    let initial_decay_rate = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            f64::NAN
        }
    } else {
        f64::NAN
    };
    let first = initial_l1.first().map(|p| p.1).unwrap_or(0.0);
    BoundaryReport {
        lateral_max_error,
        initial_l1,
        initial_decay_rate,
        tol_lateral,
        tol_initial,
        pass: lateral_max_error <= tol_lateral && first <= tol_initial,
    }
}
