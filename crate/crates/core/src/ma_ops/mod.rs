//! Discrete complex Monge-Ampère operators.
//!
//! Every operator is assembled from Shortley–Weller second differences
//! along the grid's stencil directions. For a unit-determinant positive `A`,
//! `Δ_A u = (1/n) Re tr(A · ∂∂̄u)` is a real quadratic form `Σ M_pq ∂_p∂_q u`
//! in the real Hessian; when `M` is diagonally dominant the mixed terms are
//! rewritten with the diagonal directions `e_p ± e_q` so that every
//! off-centre weight is non-negative.

mod dictionary;
mod solver;

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::domain::{Neighbor, SpaceGrid};
use crate::hermitian::Hermitian;
use crate::potentials::Slice;
use crate::{Error, Result};

pub use dictionary::HermitianDictionary;
pub use solver::{
    harmonic_extension, maximal_psh, solve_dirichlet, solve_rho, FixedRhs, LocalRhs, RhoReport, SolveStats,
    SolverOptions, ZeroRhs,
};

/// Shortley–Weller second difference along unsigned direction `u`, split as
/// `D²u = a − b · u(node)`.
#[inline]
pub(crate) fn directional_parts(grid: &SpaceGrid, slice: Slice<'_>, node: usize, u: usize) -> (f64, f64) {
    let h = grid.spacing();
    let (tp, vp) = neighbor_value(grid, slice, grid.neighbor(node, 2 * u));
    let (tm, vm) = neighbor_value(grid, slice, grid.neighbor(node, 2 * u + 1));
    let k = 2.0 / (h * h * tp * tm * (tp + tm));
    (k * (tm * vp + tp * vm), k * (tp + tm))
}

#[inline]
fn neighbor_value(grid: &SpaceGrid, slice: Slice<'_>, nb: Neighbor) -> (f64, f64) {
    match nb {
        Neighbor::Node(j) => (1.0, slice.nodes[j]),
        Neighbor::Hit(i) => (grid.hits()[i].theta, slice.trace[i]),
    }
}

/// Second difference of the slice at `node` along unsigned direction `u`.
pub fn second_difference(grid: &SpaceGrid, slice: Slice<'_>, node: usize, u: usize) -> f64 {
    let (a, b) = directional_parts(grid, slice, node, u);
    a - b * slice.nodes[node]
}

/// Real symmetric `M` with `Σ M_pq Q_pq = (1/n) Re tr(A · H(Q))`, where
/// `H(Q)_jk = ¼[(Q_{x_j x_k} + Q_{y_j y_k}) + i(Q_{x_j y_k} − Q_{y_j x_k})]`
/// is the complex Hessian of a quadratic with real Hessian `Q`.
pub fn real_form(a: &Hermitian) -> [[f64; 4]; 4] {
    let n = a.n();
    let dim = 2 * n;
    let eval = |q: &[[f64; 4]; 4]| {
        let h = complex_hessian_of_real(n, q);
        a.trace_product(&h) / n as f64
    };
    let mut m = [[0.0; 4]; 4];
    for p in 0..dim {
        for r in p..dim {
            let mut q = [[0.0; 4]; 4];
            q[p][r] = 1.0;
            q[r][p] = 1.0;
            let v = eval(&q);
            if p == r {
                m[p][p] = v;
            } else {
                m[p][r] = 0.5 * v;
                m[r][p] = 0.5 * v;
            }
        }
    }
    m
}

/// Complex Hessian `∂²/∂z_j∂z̄_k` of a quadratic form with real Hessian `q`.
pub fn complex_hessian_of_real(n: usize, q: &[[f64; 4]; 4]) -> Hermitian {
    let mut e = [[Complex64::new(0.0, 0.0); 2]; 2];
    for j in 0..n {
        for k in 0..n {
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            e[j][k] = Complex64::new(
                0.25 * (q[xj][xk] + q[yj][yk]),
                0.25 * (q[xj][yk] - q[yj][xk]),
            );
        }
    }
    Hermitian::from_entries(n, &e)
}

/// Non-negative weights on the grid's unsigned directions reproducing the
/// real form of `A`, or `None` when `A` is not diagonally dominant in that form.
pub fn monotone_weights(grid: &SpaceGrid, a: &Hermitian) -> Option<Vec<f64>> {
    let m = real_form(a);
    let dim = grid.dim();
    let dirs = grid.unsigned_directions();
    let mut w = vec![0.0; dirs.len()];
    for p in 0..dim {
        w[p] = m[p][p];
    }
    for p in 0..dim {
        for q in p + 1..dim {
            let c = m[p][q];
            if c == 0.0 {
                continue;
            }
            let mut target = [0; 4];
            target[p] = 1;
            target[q] = if c > 0.0 { 1 } else { -1 };
            match dirs.iter().position(|d| *d == target) {
                Some(u) => {
                    w[u] += c.abs();
                    w[p] -= c.abs();
                    w[q] -= c.abs();
                }
                None if c.abs() < 1e-14 => {}
                None => return None,
            }
        }
    }
    if w.iter().any(|&c| c < -1e-14) {
        return None;
    }
    for c in w.iter_mut() {
        *c = c.max(0.0);
    }
    Some(w)
}

/// One monotone stencil per usable dictionary matrix.
#[derive(Clone, Debug)]
pub struct MaOperator {
    n: usize,
    dirs: usize,
    matrices: Vec<Hermitian>,
    /// Sparse weights: `(direction, weight)` runs delimited by `offsets`.
    entries: Vec<(usize, f64)>,
    offsets: Vec<usize>,
    dropped: usize,
}

impl MaOperator {
    pub fn new(grid: &SpaceGrid, dict: &HermitianDictionary) -> Result<Self> {
        if dict.n() != grid.n() {
            return Err(Error::GridMismatch("dictionary dimension"));
        }
        let mut op = MaOperator {
            n: grid.n(),
            dirs: grid.unsigned_directions().len(),
            matrices: Vec::new(),
            entries: Vec::new(),
            offsets: vec![0],
            dropped: 0,
        };
        for a in dict.matrices() {
            match monotone_weights(grid, a) {
                Some(w) => {
                    for (u, c) in w.iter().enumerate() {
                        if *c > 0.0 {
                            op.entries.push((u, *c));
                        }
                    }
                    op.offsets.push(op.entries.len());
                    op.matrices.push(*a);
                }
                None => {
                    log::warn!("dropping dictionary matrix {a:?}: not diagonally dominant on this stencil");
                    op.dropped += 1;
                }
            }
        }
        if op.matrices.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        Ok(op)
    }

    /// The operator of the identity alone, `Δ_I = (1/4n) Δ`.
    pub fn laplacian(grid: &SpaceGrid) -> Self {
        Self::new(grid, &HermitianDictionary::identity_only(grid.n()))
            .expect("identity is always diagonally dominant")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn matrices(&self) -> &[Hermitian] {
        &self.matrices
    }

    pub fn direction_count(&self) -> usize {
        self.dirs
    }

    pub(crate) fn weights(&self, i: usize) -> &[(usize, f64)] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Per-matrix `(S_A, D_A)` with `Δ_A u = S_A − D_A u(node)`.
    #[inline]
    pub(crate) fn lines(&self, parts: &[(f64, f64)], out: &mut Vec<(f64, f64)>) {
        out.clear();
        for i in 0..self.len() {
            let (mut s, mut d) = (0.0, 0.0);
            for &(u, c) in self.weights(i) {
                s += c * parts[u].0;
                d += c * parts[u].1;
            }
            out.push((s, d));
        }
    }

    /// `(S_A, D_A)` lines at one node.
    pub(crate) fn node_lines(
        &self,
        grid: &SpaceGrid,
        slice: Slice<'_>,
        node: usize,
        parts: &mut Vec<(f64, f64)>,
        out: &mut Vec<(f64, f64)>,
    ) {
        parts.clear();
        for u in 0..self.dirs {
            parts.push(directional_parts(grid, slice, node, u));
        }
        self.lines(parts, out);
    }

    /// `min_A Δ_A u` at every node.
    pub fn ma_root(&self, grid: &SpaceGrid, slice: Slice<'_>) -> Vec<f64> {
        let mut parts = Vec::new();
        let mut lines = Vec::new();
        (0..grid.len())
            .map(|node| {
                self.node_lines(grid, slice, node, &mut parts, &mut lines);
                let v = slice.nodes[node];
                lines
                    .iter()
                    .map(|(s, d)| s - d * v)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// `Δ_A u` at every node for the `i`-th operator matrix.
    pub fn apply(&self, i: usize, grid: &SpaceGrid, slice: Slice<'_>) -> Vec<f64> {
        (0..grid.len())
            .map(|node| {
                self.weights(i)
                    .iter()
                    .map(|&(u, c)| c * second_difference(grid, slice, node, u))
                    .sum()
            })
            .collect()
    }
}

/// Discrete `∂²u/∂z_j∂z̄_k` at a node.
pub fn complex_hessian(grid: &SpaceGrid, slice: Slice<'_>, node: usize) -> Hermitian {
    let n = grid.n();
    let d2 = |u: usize| second_difference(grid, slice, node, u);
    if n == 1 {
        return Hermitian::one_by_one(0.25 * (d2(0) + d2(1)));
    }
    // Diagonal pairs follow `stencil_directions`: (x1,x2), (y1,y2), (x1,y2), (y1,x2),
    // each as `e_p + e_q` then `e_p − e_q`.
    let mixed = |pair: usize| 0.25 * (d2(4 + 2 * pair) - d2(5 + 2 * pair));
    let (x1x2, y1y2, x1y2, y1x2) = (mixed(0), mixed(1), mixed(2), mixed(3));
    Hermitian::two_by_two(
        0.25 * (d2(0) + d2(1)),
        Complex64::new(0.25 * (x1x2 + y1y2), 0.25 * (x1y2 - y1x2)),
        0.25 * (d2(2) + d2(3)),
    )
}

/// `Δ_A u = (1/n) Re tr(A ∂∂̄u)` at every node.
///
/// Uses the monotone stencil when `A` is diagonally dominant, otherwise the
/// trace against the discrete complex Hessian (still exact on quadratics).
pub fn delta_a(grid: &SpaceGrid, slice: Slice<'_>, a: &Hermitian) -> Result<Vec<f64>> {
    if a.n() != grid.n() {
        return Err(Error::GridMismatch("matrix dimension"));
    }
    if !a.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    match monotone_weights(grid, a) {
        Some(w) => Ok((0..grid.len())
            .map(|node| {
                w.iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(u, c)| c * second_difference(grid, slice, node, u))
                    .sum()
            })
            .collect()),
        None => {
            log::warn!("Δ_A for a non-dominant matrix uses the non-monotone Hessian form");
            let scale = 1.0 / grid.n() as f64;
            Ok((0..grid.len())
                .map(|node| scale * a.trace_product(&complex_hessian(grid, slice, node)))
                .collect())
        }
    }
}

/// Per-node density `det(∂∂̄u)` with negative eigenvalues clamped to zero.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaField {
    pub values: Vec<f64>,
}

impl MaField {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn ma_density(grid: &SpaceGrid, slice: Slice<'_>) -> MaField {
    let n = grid.n() as i32;
    MaField {
        values: (0..grid.len())
            .map(|node| complex_hessian(grid, slice, node).det_root_clamped().powi(n))
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixedMaReport {
    /// Whether both hypotheses held; when false the check was skipped.
    pub preconditions_met: bool,
    pub precondition_failure: Option<alloc::string::String>,
    /// `min` over nodes of `det(λu+(1−λ)v) − e^{λf_1+(1−λ)f_2} μ`.
    pub min_margin: f64,
    pub violations: usize,
    pub pass: bool,
}

/// Checks `det(λu + (1−λ)v) ≥ e^{λ f_1 + (1−λ) f_2} μ` node by node, given
/// `det u ≥ e^{f_1} μ` and `det v ≥ e^{f_2} μ`.
#[allow(clippy::too_many_arguments)]
pub fn mixed_ma_check(
    grid: &SpaceGrid,
    u: Slice<'_>,
    v: Slice<'_>,
    lambda: f64,
    f1: &[f64],
    f2: &[f64],
    mu: &[f64],
    dict: &MaOperator,
    tol: f64,
) -> MixedMaReport {
    let skipped = |why: &str| MixedMaReport {
        preconditions_met: false,
        precondition_failure: Some(why.into()),
        min_margin: f64::NAN,
        violations: 0,
        pass: false,
    };
    if !(0.0..=1.0).contains(&lambda) {
        return skipped("λ outside [0, 1]");
    }
    let psh_tol = 10.0 * grid.spacing().powi(2) + 1e-9;
    for (name, s) in [("u", u), ("v", v)] {
        let m = crate::potentials::psh_check(grid, s, dict, psh_tol);
        if !m.pass {
            return skipped(if name == "u" { "u fails psh_check" } else { "v fails psh_check" });
        }
    }
    let du = ma_density(grid, u);
    let dv = ma_density(grid, v);
    for node in 0..grid.len() {
        if du.values[node] < f1[node].exp() * mu[node] - tol {
            return skipped("hypothesis on u fails");
        }
        if dv.values[node] < f2[node].exp() * mu[node] - tol {
            return skipped("hypothesis on v fails");
        }
    }
    let mixed: Vec<f64> = u
        .nodes
        .iter()
        .zip(v.nodes)
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect();
    let trace: Vec<f64> = u
        .trace
        .iter()
        .zip(v.trace)
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect();
    let dm = ma_density(grid, Slice::new(&mixed, &trace));
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    for node in 0..grid.len() {
        let rhs = (lambda * f1[node] + (1.0 - lambda) * f2[node]).exp() * mu[node];
        let margin = dm.values[node] - rhs;
        min_margin = min_margin.min(margin);
        if margin < -tol {
            violations += 1;
        }
    }
    MixedMaReport {
        preconditions_met: true,
        precondition_failure: None,
        min_margin,
        violations,
        pass: violations == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BallDomain;

    fn sample(grid: &SpaceGrid, f: impl Fn(&[f64]) -> f64) -> (Vec<f64>, Vec<f64>) {
        let nodes = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        let trace = grid
            .hits()
            .iter()
            .map(|h| f(&h.point[..grid.dim()]))
            .collect();
        (nodes, trace)
    }

    #[test]
    fn identity_form_is_quarter_laplacian() {
        let m = real_form(&Hermitian::identity(2));
        for p in 0..4 {
            assert!((m[p][p] - 0.125).abs() < 1e-15);
        }
        let m1 = real_form(&Hermitian::identity(1));
        assert!((m1[0][0] - 0.25).abs() < 1e-15 && m1[0][1] == 0.0);
    }

    #[test]
    fn hessian_exact_on_quadratic_in_c2() {
        let grid = SpaceGrid::build(BallDomain::new(2).unwrap(), 0.25).unwrap();
        // |z1|² + 2|z2|² + Re(z1 z̄2) = x1² + y1² + 2x2² + 2y2² + x1x2 + y1y2
        let f = |x: &[f64]| {
            x[0] * x[0] + x[1] * x[1] + 2.0 * (x[2] * x[2] + x[3] * x[3]) + x[0] * x[2] + x[1] * x[3]
        };
        let (nodes, trace) = sample(&grid, f);
        let s = Slice::new(&nodes, &trace);
        for node in 0..grid.len() {
            let h = complex_hessian(&grid, s, node);
            assert!((h.get(0, 0).re - 1.0).abs() < 1e-11);
            assert!((h.get(1, 1).re - 2.0).abs() < 1e-11);
            assert!((h.get(0, 1) - Complex64::new(0.5, 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn delta_a_of_diagonal_matrix() {
        let grid = SpaceGrid::build(BallDomain::new(2).unwrap(), 0.25).unwrap();
        let (nodes, trace) = sample(&grid, |x| x[0] * x[0] + x[1] * x[1]);
        let a = Hermitian::two_by_two(2.0, Complex64::new(0.0, 0.0), 0.5);
        let d = delta_a(&grid, Slice::new(&nodes, &trace), &a).unwrap();
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-11));
    }

    #[test]
    fn ma_root_one_dimensional_is_quarter_laplacian() {
        let grid = SpaceGrid::build(BallDomain::new(1).unwrap(), 0.125).unwrap();
        let (nodes, trace) = sample(&grid, |x| x[0] * x[0] * x[0] + x[1] * x[1]);
        let s = Slice::new(&nodes, &trace);
        let op = MaOperator::new(&grid, &HermitianDictionary::standard(1).unwrap()).unwrap();
        let root = op.ma_root(&grid, s);
        for node in 0..grid.len() {
            let lap = second_difference(&grid, s, node, 0) + second_difference(&grid, s, node, 1);
            assert!((root[node] - 0.25 * lap).abs() < 1e-9);
        }
    }

    #[test]
    fn density_clamps_negative_spectrum() {
        let grid = SpaceGrid::build(BallDomain::new(2).unwrap(), 0.25).unwrap();
        let (nodes, trace) = sample(&grid, |x| -(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]));
        let field = ma_density(&grid, Slice::new(&nodes, &trace));
        assert!(field.values.iter().all(|v| v.abs() < 1e-12));
    }
}
