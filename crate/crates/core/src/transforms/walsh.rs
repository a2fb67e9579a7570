use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{space_interp_tol, Interpolant, TransformReport, BASE_TOL};
use crate::domain::{SpaceGrid, TimeGrid};
use crate::flow::{sub_barrier_cauchy, sub_barrier_dirichlet, super_barrier, ConstantsLedger, FlowProblem};
use crate::ma_ops::{MaOperator, SolverOptions};
use crate::potentials::GridFunction;
use crate::{Error, Result};

/// Moduli of continuity at lag `delta` of the data entering the Walsh bound.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Moduli {
    pub delta: f64,
    /// Of the subsolution `max(Dirichlet barrier, Cauchy barrier)`.
    pub eta_u: f64,
    /// Of the harmonic super-barrier.
    pub eta_h: f64,
    /// Of `F` in `z`, uniformly in `t` and in `r ∈ [−M_U, M_U]`.
    pub eta_f: f64,
    /// Of `G = log g`.
    pub eta_g: f64,
}

impl Moduli {
    /// `η_u + η_H + (η_F + η_G) T`.
    pub fn bound(&self, horizon: f64) -> f64 {
        self.eta_u + self.eta_h + (self.eta_f + self.eta_g) * horizon
    }
}

/// Non-zero lattice offsets of length at most `delta`, one of each `±` pair.
fn offsets(grid: &SpaceGrid, delta: f64) -> Vec<[i32; 4]> {
    let dim = grid.dim();
    let r = (delta / grid.spacing() * (1.0 + 1e-12)).floor() as i32;
    let r2 = delta * delta / (grid.spacing() * grid.spacing()) * (1.0 + 1e-12);
    let mut out = Vec::new();
    let span = 2 * r + 1;
    for code in 0..span.pow(dim as u32) {
        let mut k = [0i32; 4];
        let mut c = code;
        for slot in k.iter_mut().take(dim) {
            *slot = c % span - r;
            c /= span;
        }
        let len2: i32 = k.iter().map(|v| v * v).sum();
        // Keep offsets whose first non-zero entry is positive.
        let positive = k.iter().find(|v| **v != 0).is_some_and(|v| *v > 0);
        if len2 > 0 && (len2 as f64) <= r2 && positive {
            out.push(k);
        }
    }
    out
}

/// Node pairs at lag at most `delta`.
fn node_pairs(grid: &SpaceGrid, delta: f64) -> Vec<(usize, usize)> {
    let offs = offsets(grid, delta);
    let mut pairs = Vec::new();
    for i in 0..grid.len() {
        let base = grid.lattice_index(i);
        for o in &offs {
            let mut k = base;
            for p in 0..grid.dim() {
                k[p] += o[p];
            }
            if let Some(j) = grid.lookup(&k[..grid.dim()]) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// `sup |u(t, y₁) − u(t, y₂)|` over time nodes and grid pairs at distance at
/// most `delta`: node pairs on the lattice and node–hit pairs along the
/// stencil.
pub fn modulus(u: &GridFunction, delta: f64) -> f64 {
    let grid = u.space();
    let pairs = node_pairs(grid, delta);
    let h = grid.spacing();
    let hit_pairs: Vec<(usize, usize)> = grid
        .hits()
        .iter()
        .enumerate()
        .filter(|(_, hit)| {
            let d = grid.signed_direction(hit.direction);
            let len = d.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt();
            hit.theta * h * len <= delta * (1.0 + 1e-12)
        })
        .map(|(i, hit)| (hit.node, i))
        .collect();
    let mut eta: f64 = 0.0;
    for k in 0..u.time().len() {
        let nodes = u.nodes_at(k);
        let trace = u.trace_at(k);
        for &(i, j) in &pairs {
            eta = eta.max((nodes[i] - nodes[j]).abs());
        }
        for &(i, j) in &hit_pairs {
            eta = eta.max((nodes[i] - trace[j]).abs());
        }
    }
    eta
}

/// Measures the four moduli at lag `delta` by pair sampling on the grid.
pub fn measure_moduli(
    problem: &FlowProblem,
    time: Arc<TimeGrid>,
    op: &MaOperator,
    rho: &[f64],
    ledger: &ConstantsLedger,
    delta: f64,
    opts: &SolverOptions,
) -> Result<Moduli> {
    let dirichlet = sub_barrier_dirichlet(problem, time.clone(), op, rho, ledger, opts)?;
    let cauchy = sub_barrier_cauchy(problem, time.clone(), rho, ledger)?;
    let harmonic = super_barrier(problem, time, opts)?;
    moduli_from_barriers(problem, &dirichlet.u, &cauchy, &harmonic, ledger, delta)
}

/// [`measure_moduli`] with the barriers already computed.
pub fn moduli_from_barriers(
    problem: &FlowProblem,
    dirichlet: &GridFunction,
    cauchy: &GridFunction,
    harmonic: &GridFunction,
    ledger: &ConstantsLedger,
    delta: f64,
) -> Result<Moduli> {
    if !(delta >= 0.0) {
        return Err(Error::OutOfRange(alloc::format!("lag {delta}")));
    }
    let grid = &problem.space;
    let time = harmonic.time();
    let sub = dirichlet.max_with(cauchy)?;
    let eta_u = modulus(&sub, delta);
    let eta_h = modulus(harmonic, delta);

    let pairs = node_pairs(grid, delta);
    let r_samples = 9;
    let mut eta_f: f64 = 0.0;
    for &t in time.nodes() {
        for j in 0..r_samples {
            let r = ledger.m_u * (2.0 * j as f64 / (r_samples - 1) as f64 - 1.0);
            for &(a, b) in &pairs {
                let fa = problem.f.eval(t, grid.point(a), r);
                let fb = problem.f.eval(t, grid.point(b), r);
                eta_f = eta_f.max((fa - fb).abs());
            }
        }
    }
    let g = problem.g.values();
    let mut eta_g: f64 = 0.0;
    for &(a, b) in &pairs {
        let d = match (g[a] > 0.0, g[b] > 0.0) {
            (true, true) => (g[a].ln() - g[b].ln()).abs(),
            (false, false) => 0.0,
            _ => f64::INFINITY,
        };
        eta_g = eta_g.max(d);
    }
    let moduli = Moduli {
        delta,
        eta_u,
        eta_h,
        eta_f,
        eta_g,
    };
    log::info!("moduli at lag {delta}: {moduli:?}");
    Ok(moduli)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WalshReport {
    pub moduli: Moduli,
    /// `η_u + η_H + (η_F + η_G) T`.
    pub bound: f64,
    /// `max |U(t, z ± ξ) − U(t, z)|` over the overlap.
    pub max_increment: f64,
    /// Nodes where both `z + ξ` and `z − ξ` could be evaluated.
    pub overlap_nodes: usize,
    /// Dominance of the bound: `margin = min (bound − |U(t, z ± ξ) − U(t, z)|)`.
    pub report: TransformReport,
}

/// `W = max(U, U(·, · + ξ) − bound)` on the nodes where `z + ξ` can be
/// interpolated, `U` elsewhere, together with the check
/// `|U(t, z ± ξ) − U(t, z)| ≤ η_u + η_H + (η_F + η_G)T`.
pub fn walsh_translate(u: &GridFunction, xi: &[f64], moduli: &Moduli) -> Result<(GridFunction, WalshReport)> {
    let grid = u.space();
    let dim = grid.dim();
    if xi.len() != dim {
        return Err(Error::GridMismatch("translation vector length"));
    }
    let len = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len > moduli.delta * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::OutOfRange(alloc::format!(
            "|ξ| = {len} exceeds the lag {} of the moduli",
            moduli.delta
        )));
    }
    let bound = moduli.bound(u.time().horizon());
    let it = Interpolant::new(u);
    let mut values = Vec::with_capacity(u.values().len());
    let mut margin = f64::INFINITY;
    let mut worst = (0, 0);
    let mut max_increment: f64 = 0.0;
    let mut overlap = 0;
    let mut plus = [0.0; 4];
    let mut minus = [0.0; 4];
    for k in 0..u.time().len() {
        let slice = it.slice(k);
        for i in 0..grid.len() {
            let z = grid.point(i);
            for p in 0..dim {
                plus[p] = z[p] + xi[p];
                minus[p] = z[p] - xi[p];
            }
            let here = u.value(k, i);
            let shifted = slice.eval(&plus[..dim]);
            let mut w = here;
            if let Some(up) = shifted {
                w = w.max(up - bound);
            }
            values.push(w);
            if let (Some(up), Some(down)) = (shifted, slice.eval(&minus[..dim])) {
                if k == 0 {
                    overlap += 1;
                }
                let inc = (up - here).abs().max((down - here).abs());
                max_increment = max_increment.max(inc);
                if bound - inc < margin {
                    margin = bound - inc;
                    worst = (k, i);
                }
            }
        }
    }
    if overlap == 0 {
        return Err(Error::OutOfRange(alloc::format!("translation by {len} leaves no overlap")));
    }
    let w = GridFunction::new(grid.clone(), u.time().clone(), values, u.trace().to_vec())?;
    let tol = BASE_TOL + space_interp_tol(u);
    let report = TransformReport {
        transform: "walsh".into(),
        margin,
        worst,
        constant: bound,
        tol,
        residual: None,
        pass: margin >= -tol,
    };
    Ok((
        w,
        WalshReport {
            moduli: moduli.clone(),
            bound,
            max_increment,
            overlap_nodes: overlap,
            report,
        },
    ))
}
