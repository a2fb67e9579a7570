//! The unit ball as a masked Cartesian lattice, and the time lattice.
//!
//! Real coordinates are ordered `(x_1, y_1, x_2, y_2)` with `z_j = x_j + i y_j`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Lattice points with `|x|² < 1 − SPHERE_EPS` count as strictly inside.
pub const SPHERE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BallDomain {
    n: usize,
}

impl BallDomain {
    pub fn new(n: usize) -> Result<Self> {
        if n == 1 || n == 2 {
            Ok(BallDomain { n })
        } else {
            Err(Error::UnsupportedDimension(n))
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Real dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Defining function `|z|² − 1`.
    pub fn rho0(&self, x: &[f64]) -> f64 {
        norm_sqr(x) - 1.0
    }

    pub fn volume(&self) -> f64 {
        match self.n {
            1 => core::f64::consts::PI,
            _ => 0.5 * core::f64::consts::PI * core::f64::consts::PI,
        }
    }
}

pub(crate) fn norm_sqr(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NodeKind {
    Interior,
    NearBoundary,
    Exterior,
}

/// Intersection of a lattice ray from an active node with the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryHit {
    pub node: usize,
    /// Signed direction index, see [`SpaceGrid::signed_direction`].
    pub direction: usize,
    /// Fraction of the lattice step at which the ray meets the sphere.
    pub theta: f64,
    /// The sphere point; only the first `2n` entries are used.
    pub point: [f64; 4],
}

/// Where the lattice step from a node along a signed direction lands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Node(usize),
    Hit(usize),
}

const HIT_FLAG: u32 = 1 << 31;

/// Masked lattice `h·ℤ^{2n} ∩ 𝔹` with Shortley–Weller boundary bookkeeping.
///
/// Only active nodes (strictly inside the ball) are stored. The stencil uses
/// the `2n` coordinate axes and, for `n = 2`, the diagonals `e_p ± e_q` for
/// the four pairs that couple `z_1` with `z_2`; these are exactly the
/// directions needed by the mixed terms of `∂²/∂z_1∂z̄_2`.
#[derive(Clone, Debug)]
pub struct SpaceGrid {
    domain: BallDomain,
    h: f64,
    m: i32,
    coords: Vec<f64>,
    lattice: Vec<[i32; 4]>,
    kinds: Vec<NodeKind>,
    index: Vec<u32>,
    directions: Vec<[i32; 4]>,
    neighbors: Vec<u32>,
    hits: Vec<BoundaryHit>,
}

const NO_NODE: u32 = u32::MAX;

/// Unsigned stencil directions for the given complex dimension.
pub fn stencil_directions(n: usize) -> Vec<[i32; 4]> {
    let mut dirs = Vec::new();
    for p in 0..2 * n {
        let mut v = [0; 4];
        v[p] = 1;
        dirs.push(v);
    }
    if n == 2 {
        for (p, q) in [(0, 2), (1, 3), (0, 3), (1, 2)] {
            let mut plus = [0; 4];
            plus[p] = 1;
            plus[q] = 1;
            let mut minus = [0; 4];
            minus[p] = 1;
            minus[q] = -1;
            dirs.push(plus);
            dirs.push(minus);
        }
    }
    dirs
}

impl SpaceGrid {
    pub fn build(domain: BallDomain, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidSpacing(h));
        }
        let n = domain.n();
        let dim = domain.dim();
        let m = (1.0 / h + 1e-9).floor() as i32;
        let side = (2 * m + 1) as usize;
        let total = side.pow(dim as u32);
        let mut index = vec![NO_NODE; total];
        let mut coords = Vec::new();
        let mut lattice = Vec::new();

        let mut k = [0i32; 4];
        for flat in 0..total {
            let mut rem = flat;
            for c in k.iter_mut().take(dim).rev() {
                *c = (rem % side) as i32 - m;
                rem /= side;
            }
            let mut x = [0.0; 4];
            for p in 0..dim {
                x[p] = k[p] as f64 * h;
            }
            if norm_sqr(&x[..dim]) < 1.0 - SPHERE_EPS {
                index[flat] = lattice.len() as u32;
                lattice.push(k);
                coords.extend_from_slice(&x[..dim]);
            }
        }

        let directions = stencil_directions(n);
        let signed = 2 * directions.len();
        let count = lattice.len();
        let mut kinds = Vec::with_capacity(count);
        let mut neighbors = vec![0u32; count * signed];
        let mut hits = Vec::new();

        let mut grid = SpaceGrid {
            domain,
            h,
            m,
            coords,
            lattice,
            kinds: Vec::new(),
            index,
            directions,
            neighbors: Vec::new(),
            hits: Vec::new(),
        };

        for node in 0..count {
            let x = grid.point(node);
            let mut interior = true;
            for p in 0..dim {
                for sgn in [1.0, -1.0] {
                    let mut y = [0.0; 4];
                    y[..dim].copy_from_slice(x);
                    y[p] += sgn * h;
                    if norm_sqr(&y[..dim]) > 1.0 + SPHERE_EPS {
                        interior = false;
                    }
                }
            }
            kinds.push(if interior {
                NodeKind::Interior
            } else {
                NodeKind::NearBoundary
            });
            for s in 0..signed {
                let v = grid.signed_direction(s);
                let mut kk = grid.lattice[node];
                for p in 0..dim {
                    kk[p] += v[p];
                }
                let target = grid.lookup(&kk);
                neighbors[node * signed + s] = match target {
                    Some(j) => j as u32,
                    None => {
                        let (theta, point) = ray_to_sphere(x, &v, h, dim);
                        hits.push(BoundaryHit {
                            node,
                            direction: s,
                            theta,
                            point,
                        });
                        (hits.len() - 1) as u32 | HIT_FLAG
                    }
                };
            }
        }
        if !kinds.iter().any(|k| *k == NodeKind::Interior) {
            return Err(Error::NoInteriorNode { spacing: h });
        }
        grid.kinds = kinds;
        grid.neighbors = neighbors;
        grid.hits = hits;
        Ok(grid)
    }

    pub fn domain(&self) -> BallDomain {
        self.domain
    }

    pub fn n(&self) -> usize {
        self.domain.n()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Largest lattice index per coordinate.
    pub fn half_width(&self) -> i32 {
        self.m
    }

    /// Number of active (interior or near-boundary) nodes.
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn point(&self, node: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[node * d..(node + 1) * d]
    }

    pub fn lattice_index(&self, node: usize) -> [i32; 4] {
        self.lattice[node]
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    /// Classifies any lattice index, including ones outside the ball.
    pub fn classify(&self, k: &[i32]) -> NodeKind {
        match self.lookup(k) {
            Some(node) => self.kinds[node],
            None => NodeKind::Exterior,
        }
    }

    pub fn interior_count(&self) -> usize {
        self.kinds
            .iter()
            .filter(|k| **k == NodeKind::Interior)
            .count()
    }

    /// Active node at a lattice index, if any.
    pub fn lookup(&self, k: &[i32]) -> Option<usize> {
        let side = 2 * self.m + 1;
        let mut flat: usize = 0;
        for &c in k.iter().take(self.dim()) {
            if c < -self.m || c > self.m {
                return None;
            }
            flat = flat * side as usize + (c + self.m) as usize;
        }
        match self.index[flat] {
            NO_NODE => None,
            j => Some(j as usize),
        }
    }

    pub fn unsigned_directions(&self) -> &[[i32; 4]] {
        &self.directions
    }

    pub fn signed_count(&self) -> usize {
        2 * self.directions.len()
    }

    /// Signed direction `s`: `2u` is `+d_u`, `2u + 1` is `−d_u`.
    pub fn signed_direction(&self, s: usize) -> [i32; 4] {
        let mut v = self.directions[s / 2];
        if s % 2 == 1 {
            for c in v.iter_mut() {
                *c = -*c;
            }
        }
        v
    }

    pub fn neighbor(&self, node: usize, s: usize) -> Neighbor {
        let raw = self.neighbors[node * self.signed_count() + s];
        if raw & HIT_FLAG != 0 {
            Neighbor::Hit((raw & !HIT_FLAG) as usize)
        } else {
            Neighbor::Node(raw as usize)
        }
    }

    pub fn hits(&self) -> &[BoundaryHit] {
        &self.hits
    }

    /// One sphere point per boundary hit, in hit order.
    pub fn lateral_trace_points(&self) -> Vec<&[f64]> {
        let d = self.dim();
        self.hits.iter().map(|hit| &hit.point[..d]).collect()
    }

    pub fn has_hit(&self, node: usize) -> bool {
        (0..self.signed_count()).any(|s| matches!(self.neighbor(node, s), Neighbor::Hit(_)))
    }

    /// Lattice cell volume `h^{2n}`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }
}

fn ray_to_sphere(x: &[f64], v: &[i32; 4], h: f64, dim: usize) -> (f64, [f64; 4]) {
    let mut a = 0.0;
    let mut b = 0.0;
    for p in 0..dim {
        let w = v[p] as f64 * h;
        a += w * w;
        b += 2.0 * x[p] * w;
    }
    let c = norm_sqr(x) - 1.0;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let theta = if b >= 0.0 {
        -2.0 * c / (b + disc)
    } else {
        (disc - b) / (2.0 * a)
    };
    let theta = theta.clamp(f64::MIN_POSITIVE, 1.0);
    let mut point = [0.0; 4];
    for p in 0..dim {
        point[p] = x[p] + theta * h * v[p] as f64;
    }
    (theta, point)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Grading {
    Uniform,
    /// `levels` steps shrinking geometrically by `ratio` toward `t = 0`.
    Geometric { ratio: f64, levels: usize },
}

impl Default for Grading {
    fn default() -> Self {
        Grading::Geometric {
            ratio: 1.2,
            levels: 8,
        }
    }
}

/// Time nodes `0 = t_0 < … < t_K = S` inside the horizon `T`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeGrid {
    horizon: f64,
    nodes: Vec<f64>,
    grading: Grading,
}

impl TimeGrid {
    pub fn uniform(horizon: f64, solve_to: f64, steps: usize) -> Result<Self> {
        Self::with_grading(horizon, solve_to, steps, Grading::Uniform)
    }

    /// `steps` uniform steps of size δ preceded, when graded, by `levels`
    /// steps `δ r^{-levels}, …, δ r^{-1}`; δ is chosen so the last node is `S`.
    pub fn with_grading(horizon: f64, solve_to: f64, steps: usize, grading: Grading) -> Result<Self> {
        check_horizon(horizon, solve_to)?;
        if steps == 0 {
            return Err(Error::InvalidTimeGrid(format!("step count must be positive")));
        }
        let mut nodes = vec![0.0];
        match grading {
            Grading::Uniform => {
                let dt = solve_to / steps as f64;
                for k in 1..steps {
                    nodes.push(k as f64 * dt);
                }
            }
            Grading::Geometric { ratio, levels } => {
                if !(1.0..=2.0).contains(&ratio) {
                    return Err(Error::InvalidTimeGrid(format!(
                        "grading ratio {ratio} outside [1, 2]"
                    )));
                }
                let graded: f64 = (1..=levels).map(|j| ratio.powi(-(j as i32))).sum();
                let dt = solve_to / (steps as f64 + graded);
                let mut t = 0.0;
                for j in (1..=levels).rev() {
                    t += dt * ratio.powi(-(j as i32));
                    nodes.push(t);
                }
                for k in 1..steps {
                    nodes.push(t + k as f64 * dt);
                }
            }
        }
        nodes.push(solve_to);
        Ok(TimeGrid {
            horizon,
            nodes,
            grading,
        })
    }

    pub fn from_nodes(horizon: f64, nodes: Vec<f64>) -> Result<Self> {
        if nodes.first() != Some(&0.0) {
            return Err(Error::InvalidTimeGrid(format!("first node must be 0")));
        }
        if nodes.len() < 2 {
            return Err(Error::TooFewTimeNodes {
                needed: 2,
                found: nodes.len(),
            });
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidTimeGrid(format!("nodes not strictly increasing")));
        }
        check_horizon(horizon, *nodes.last().unwrap())?;
        Ok(TimeGrid {
            horizon,
            nodes,
            grading: Grading::Uniform,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn t(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    /// Number of steps `K`.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn step(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }

    pub fn max_step(&self) -> f64 {
        (0..self.steps()).map(|k| self.step(k)).fold(0.0, f64::max)
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// Grid made of the first `count` nodes.
    pub fn prefix(&self, count: usize) -> Result<Self> {
        Self::from_nodes(self.horizon, self.nodes[..count].to_vec())
    }

    /// Interval `[t_k, t_{k+1}]` containing `t` and the linear weight of `t_{k+1}`.
    pub fn locate(&self, t: f64) -> Option<(usize, f64)> {
        let last = self.last();
        if t < 0.0 || t > last * (1.0 + 1e-14) + 1e-15 {
            return None;
        }
        let k = match self.nodes.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(k) => return Some((k.min(self.steps() - 1), if k == self.steps() { 1.0 } else { 0.0 })),
            Err(k) => k.saturating_sub(1).min(self.steps() - 1),
        };
        let w = ((t - self.nodes[k]) / self.step(k)).clamp(0.0, 1.0);
        Some((k, w))
    }
}

fn check_horizon(horizon: f64, solve_to: f64) -> Result<()> {
    if !(solve_to > 0.0) || !(solve_to <= horizon) || !horizon.is_finite() {
        return Err(Error::InvalidTimeGrid(format!(
            "need 0 < S <= T, got S = {solve_to}, T = {horizon}"
        )));
    }
    Ok(())
}
