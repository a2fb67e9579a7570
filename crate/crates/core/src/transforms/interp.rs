//! Off-grid evaluation of grid functions.
//!
//! In space: multilinear interpolation on the lattice cell plus the
//! correction `−½ Σ_p s_p (1 − s_p) h² D²_p u`, with the axis second
//! differences themselves interpolated multilinearly. The correction makes
//! the interpolant exact on quadratics. In time: linear interpolation.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::domain::SpaceGrid;
use crate::ma_ops::second_difference;
use crate::potentials::{GridFunction, Slice};

/// Interpolation data of one slice: values and the axis second differences.
pub struct SliceInterpolant<'a> {
    grid: &'a SpaceGrid,
    values: &'a [f64],
    /// `curvature[node * dim + p]`.
    curvature: Vec<f64>,
}

impl<'a> SliceInterpolant<'a> {
    pub fn new(grid: &'a SpaceGrid, slice: Slice<'a>) -> Self {
        let dim = grid.dim();
        let mut curvature = Vec::with_capacity(grid.len() * dim);
        for node in 0..grid.len() {
            for p in 0..dim {
                curvature.push(second_difference(grid, slice, node, p));
            }
        }
        SliceInterpolant {
            grid,
            values: slice.nodes,
            curvature,
        }
    }

    /// Value at `x`, or `None` when a corner of its lattice cell is not an
    /// active node.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        let grid = self.grid;
        let dim = grid.dim();
        let h = grid.spacing();
        let mut base = [0i32; 4];
        let mut s = [0.0; 4];
        for p in 0..dim {
            let q = x[p] / h;
            let f = q.floor();
            let mut b = f as i32;
            let mut frac = q - f;
            // Points on a lattice hyperplane use the cell below when the one
            // above is missing.
            if frac < 1e-12 && b > -grid.half_width() {
                b -= 1;
                frac = 1.0;
            }
            base[p] = b;
            s[p] = frac;
        }
        let mut value = 0.0;
        let mut curv = [0.0; 4];
        for corner in 0..(1usize << dim) {
            let mut k = base;
            let mut w = 1.0;
            for p in 0..dim {
                if corner >> p & 1 == 1 {
                    k[p] += 1;
                    w *= s[p];
                } else {
                    w *= 1.0 - s[p];
                }
            }
            if w == 0.0 {
                // Zero-weight corners may sit outside the ball.
                if grid.lookup(&k).is_none() {
                    continue;
                }
            }
            let node = grid.lookup(&k)?;
            value += w * self.values[node];
            for p in 0..dim {
                curv[p] += w * self.curvature[node * dim + p];
            }
        }
        for p in 0..dim {
            value -= 0.5 * s[p] * (1.0 - s[p]) * h * h * curv[p];
        }
        Some(value)
    }
}

/// Plain multilinear interpolation of node values, `None` when a corner with
/// positive weight is inactive.
pub fn multilinear(grid: &SpaceGrid, values: &[f64], x: &[f64]) -> Option<f64> {
    let dim = grid.dim();
    let h = grid.spacing();
    let mut base = [0i32; 4];
    let mut s = [0.0; 4];
    for p in 0..dim {
        let q = x[p] / h;
        let f = q.floor();
        base[p] = f as i32;
        s[p] = q - f;
    }
    let mut value = 0.0;
    for corner in 0..(1usize << dim) {
        let mut k = base;
        let mut w = 1.0;
        for p in 0..dim {
            if corner >> p & 1 == 1 {
                k[p] += 1;
                w *= s[p];
            } else {
                w *= 1.0 - s[p];
            }
        }
        if w == 0.0 {
            continue;
        }
        value += w * values[grid.lookup(&k)?];
    }
    Some(value)
}

/// Space-time interpolant of a grid function.
pub struct Interpolant<'a> {
    u: &'a GridFunction,
    slices: Vec<SliceInterpolant<'a>>,
}

impl<'a> Interpolant<'a> {
    pub fn new(u: &'a GridFunction) -> Self {
        let slices = (0..u.time().len())
            .map(|k| SliceInterpolant::new(u.space(), u.slice(k)))
            .collect();
        Interpolant { u, slices }
    }

    pub fn slice(&self, k: usize) -> &SliceInterpolant<'a> {
        &self.slices[k]
    }

    /// `u(t, x)`, or `None` off the grid.
    pub fn eval(&self, t: f64, x: &[f64]) -> Option<f64> {
        let (k, w) = self.u.time().locate(t)?;
        let a = self.slices[k].eval(x)?;
        if w == 0.0 {
            return Some(a);
        }
        let b = self.slices[k + 1].eval(x)?;
        Some((1.0 - w) * a + w * b)
    }

    /// `u(t, node)` by linear interpolation in time only.
    pub fn at_node(&self, t: f64, node: usize) -> Option<f64> {
        let (k, w) = self.u.time().locate(t)?;
        let a = self.u.value(k, node);
        if w == 0.0 {
            return Some(a);
        }
        Some((1.0 - w) * a + w * self.u.value(k + 1, node))
    }

    /// Boundary trace value of hit `i` at time `t`, linear in time.
    pub fn trace_at(&self, t: f64, i: usize) -> Option<f64> {
        let (k, w) = self.u.time().locate(t)?;
        let a = self.u.trace_at(k)[i];
        if w == 0.0 {
            return Some(a);
        }
        Some((1.0 - w) * a + w * self.u.trace_at(k + 1)[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BallDomain, TimeGrid};
    use alloc::sync::Arc;

    #[test]
    fn exact_on_quadratics() {
        let space = Arc::new(SpaceGrid::build(BallDomain::new(2).unwrap(), 0.25).unwrap());
        let time = Arc::new(TimeGrid::uniform(1.0, 0.5, 2).unwrap());
        let f = |t: f64, x: &[f64]| {
            1.0 + 3.0 * t + x[0] * x[0] - 2.0 * x[1] * x[3] + 0.5 * x[2] * x[2] + t * x[1]
        };
        let u = GridFunction::from_fn(space, time, f).unwrap();
        let it = Interpolant::new(&u);
        for x in [[0.1, -0.2, 0.3, 0.05], [0.0, 0.0, 0.0, 0.0], [-0.33, 0.1, 0.2, -0.4]] {
            for t in [0.0, 0.1, 0.37, 0.5] {
                let v = it.eval(t, &x).unwrap();
                // Time interpolation is exact on functions affine in t.
                assert!((v - f(t, &x)).abs() < 1e-12, "{v} vs {}", f(t, &x));
            }
        }
        assert!(it.eval(0.1, &[0.9, 0.4, 0.0, 0.0]).is_none());
    }
}
