//! Grid stand-ins for parabolic potentials and their slice-level checks.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::domain::{NodeKind, SpaceGrid, TimeGrid};
use crate::ma_ops::MaOperator;
use crate::{Error, Result};

/// Values of one time slice: active nodes plus the boundary trace at the
/// grid's boundary hits.
#[derive(Clone, Copy, Debug)]
pub struct Slice<'a> {
    pub nodes: &'a [f64],
    pub trace: &'a [f64],
}

impl<'a> Slice<'a> {
    pub fn new(nodes: &'a [f64], trace: &'a [f64]) -> Self {
        Slice { nodes, trace }
    }
}

/// Samples `f` at the active nodes and at the boundary hit points.
pub fn sample_slice(grid: &SpaceGrid, f: impl Fn(&[f64]) -> f64) -> (Vec<f64>, Vec<f64>) {
    let nodes = (0..grid.len()).map(|i| f(grid.point(i))).collect();
    let trace = grid
        .hits()
        .iter()
        .map(|hit| f(&hit.point[..grid.dim()]))
        .collect();
    (nodes, trace)
}

/// Values on the time × space lattice, with a boundary trace per time node.
#[derive(Clone, Debug)]
pub struct GridFunction {
    space: Arc<SpaceGrid>,
    time: Arc<TimeGrid>,
    values: Vec<f64>,
    trace: Vec<f64>,
}

impl GridFunction {
    pub fn new(
        space: Arc<SpaceGrid>,
        time: Arc<TimeGrid>,
        values: Vec<f64>,
        trace: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != time.len() * space.len() {
            return Err(Error::GridMismatch("node values"));
        }
        if trace.len() != time.len() * space.hits().len() {
            return Err(Error::GridMismatch("boundary trace"));
        }
        if values.iter().chain(trace.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function"));
        }
        Ok(GridFunction {
            space,
            time,
            values,
            trace,
        })
    }

    /// Samples `f(t, x)` at every node and boundary hit.
    pub fn from_fn(
        space: Arc<SpaceGrid>,
        time: Arc<TimeGrid>,
        f: impl Fn(f64, &[f64]) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(time.len() * space.len());
        let mut trace = Vec::with_capacity(time.len() * space.hits().len());
        for &t in time.nodes() {
            let (v, tr) = sample_slice(&space, |x| f(t, x));
            values.extend(v);
            trace.extend(tr);
        }
        Self::new(space, time, values, trace)
    }

    /// Stacks per-time slices `(nodes, trace)`.
    pub fn from_slices(
        space: Arc<SpaceGrid>,
        time: Arc<TimeGrid>,
        slices: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(time.len() * space.len());
        let mut trace = Vec::with_capacity(time.len() * space.hits().len());
        for (v, tr) in slices {
            values.extend(v);
            trace.extend(tr);
        }
        Self::new(space, time, values, trace)
    }

    pub fn space(&self) -> &Arc<SpaceGrid> {
        &self.space
    }

    pub fn time(&self) -> &Arc<TimeGrid> {
        &self.time
    }

    pub fn slice(&self, k: usize) -> Slice<'_> {
        Slice::new(self.nodes_at(k), self.trace_at(k))
    }

    pub fn nodes_at(&self, k: usize) -> &[f64] {
        let n = self.space.len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn trace_at(&self, k: usize) -> &[f64] {
        let m = self.space.hits().len();
        &self.trace[k * m..(k + 1) * m]
    }

    pub fn value(&self, k: usize, node: usize) -> f64 {
        self.values[k * self.space.len() + node]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn same_grids(&self, other: &GridFunction) -> bool {
        (Arc::ptr_eq(&self.space, &other.space)
            || (self.space.len() == other.space.len()
                && self.space.spacing() == other.space.spacing()
                && self.space.n() == other.space.n()))
            && (Arc::ptr_eq(&self.time, &other.time) || self.time == other.time)
    }

    /// Pointwise combination of two functions on the same grids.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.same_grids(other) {
            return Err(Error::GridMismatch("grid functions live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        let trace = self.trace.iter().zip(&other.trace).map(|(a, b)| f(*a, *b)).collect();
        Self::new(self.space.clone(), self.time.clone(), values, trace)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|a| f(*a)).collect();
        let trace = self.trace.iter().map(|a| f(*a)).collect();
        Self::new(self.space.clone(), self.time.clone(), values, trace)
    }

    pub fn max_with(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    pub fn difference(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Restriction to the first `count` time nodes.
    pub fn prefix(&self, count: usize) -> Result<Self> {
        let time = Arc::new(self.time.prefix(count)?);
        let values = self.values[..count * self.space.len()].to_vec();
        let trace = self.trace[..count * self.space.hits().len()].to_vec();
        Self::new(self.space.clone(), time, values, trace)
    }

    /// Largest value of `|self − other|` over nodes (traces excluded).
    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        if !self.same_grids(other) {
            return Err(Error::GridMismatch("grid functions live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

pub type LateralFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type InitialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Cauchy–Dirichlet data: `h(t, ζ)` on the sphere and `h_0` on the closed ball.
#[derive(Clone)]
pub struct BoundaryData {
    pub lateral: LateralFn,
    pub initial: InitialFn,
    /// Declared bound for `t |∂_t h|`.
    pub kappa_h: f64,
    /// Declared bound for `t² ∂²_t h`.
    pub c_h: f64,
}

impl core::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BoundaryData")
            .field("kappa_h", &self.kappa_h)
            .field("c_h", &self.c_h)
            .finish_non_exhaustive()
    }
}

impl BoundaryData {
    pub fn new(
        lateral: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        initial: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        kappa_h: f64,
        c_h: f64,
    ) -> Self {
        BoundaryData {
            lateral: Arc::new(lateral),
            initial: Arc::new(initial),
            kappa_h,
            c_h,
        }
    }

    /// `h(t, ·)` at the boundary hits.
    pub fn lateral_trace(&self, grid: &SpaceGrid, t: f64) -> Vec<f64> {
        grid.hits()
            .iter()
            .map(|hit| (self.lateral)(t, &hit.point[..grid.dim()]))
            .collect()
    }

    /// `h_0` at the nodes with the lateral values at `t = 0` as its trace.
    pub fn initial_slice(&self, grid: &SpaceGrid) -> (Vec<f64>, Vec<f64>) {
        let nodes = (0..grid.len()).map(|i| (self.initial)(grid.point(i))).collect();
        (nodes, self.lateral_trace(grid, 0.0))
    }

    /// Samples the declared properties: finiteness, compatibility at `t = 0`,
    /// the `κ_h` and `C_h` bounds up to `solve_to`, and plurisubharmonicity
    /// of `h_0`.
    pub fn verify(&self, grid: &SpaceGrid, solve_to: f64, op: &MaOperator) -> Result<()> {
        let dim = grid.dim();
        let hits = grid.hits();
        let stride = (hits.len() / 256).max(1);
        let points: Vec<&[f64]> = hits.iter().step_by(stride).map(|h| &h.point[..dim]).collect();
        let violation = |what: &str, t: f64, x: &[f64], observed: f64, bound: f64| Error::DataViolation {
            what: String::from(what),
            t,
            point: x.to_vec(),
            observed,
            bound,
        };
        for i in 0..grid.len() {
            let v = (self.initial)(grid.point(i));
            if !v.is_finite() {
                return Err(violation("initial data not finite", 0.0, grid.point(i), v, f64::MAX));
            }
        }
        for x in &points {
            let gap = ((self.initial)(x) - (self.lateral)(0.0, x)).abs();
            if !(gap <= 1e-10) {
                return Err(violation("h_0 and h(0, ·) disagree on the sphere", 0.0, x, gap, 1e-10));
            }
        }
        let samples = 200;
        for j in 1..=samples {
            let t = solve_to * j as f64 / samples as f64;
            let eta = 1e-3 * t;
            for x in &points {
                let h = |s: f64| (self.lateral)(s, x);
                let (hm, h0, hp) = (h(t - eta), h(t), h(t + eta));
                if !(hm.is_finite() && h0.is_finite() && hp.is_finite()) {
                    return Err(violation("lateral data not finite", t, x, h0, f64::MAX));
                }
                let d1 = t * (hp - hm).abs() / (2.0 * eta);
                let tol1 = 1e-6 * (1.0 + self.kappa_h);
                if d1 > self.kappa_h + tol1 {
                    return Err(violation("t|∂_t h| exceeds the declared κ_h", t, x, d1, self.kappa_h));
                }
                let d2 = t * t * (hp - 2.0 * h0 + hm) / (eta * eta);
                let tol2 = 1e-4 * (1.0 + self.c_h.abs()) + 1e-8 * h0.abs();
                if d2 > self.c_h + tol2 {
                    return Err(violation("t²∂²_t h exceeds the declared C_h", t, x, d2, self.c_h));
                }
            }
        }
        let (nodes, trace) = self.initial_slice(grid);
        let tol = 10.0 * grid.spacing().powi(2) + 1e-9;
        let report = psh_check(grid, Slice::new(&nodes, &trace), op, tol);
        if !report.pass {
            let node = report.worst_node.unwrap_or(0);
            return Err(violation(
                "h_0 is not plurisubharmonic on the grid",
                0.0,
                grid.point(node),
                -report.min_margin,
                tol,
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PshReport {
    pub min_margin: f64,
    pub worst_node: Option<usize>,
    pub tol: f64,
    pub pass: bool,
}

/// `min` over interior nodes and dictionary matrices of `Δ_A u`.
pub fn psh_check(grid: &SpaceGrid, slice: Slice<'_>, op: &MaOperator, tol: f64) -> PshReport {
    let root = op.ma_root(grid, slice);
    let mut min_margin = f64::INFINITY;
    let mut worst_node = None;
    for (node, v) in root.iter().enumerate() {
        if grid.kind(node) == NodeKind::Interior && *v < min_margin {
            min_margin = *v;
            worst_node = Some(node);
        }
    }
    PshReport {
        min_margin,
        worst_node,
        tol,
        pass: min_margin >= -tol,
    }
}

/// `max_{k ≥ 1, z} t_k |u(t_{k+1}, z) − u(t_k, z)| / (t_{k+1} − t_k)`.
pub fn time_lipschitz_estimate(u: &GridFunction) -> Result<f64> {
    let time = u.time();
    if time.len() < 2 {
        return Err(Error::TooFewTimeNodes {
            needed: 2,
            found: time.len(),
        });
    }
    let mut best: f64 = 0.0;
    for k in 1..time.steps() {
        let dt = time.step(k);
        let (a, b) = (u.nodes_at(k), u.nodes_at(k + 1));
        let slope = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((y - x).abs()));
        best = best.max(time.t(k) * slope / dt);
    }
    Ok(best)
}

/// Largest `|∂_t u|` difference quotient on steps inside `[t_{k0}, t_{k1}]`,
/// restricted to the given nodes (all nodes when `None`).
pub fn max_time_slope(u: &GridFunction, k0: usize, k1: usize, nodes: Option<&[usize]>) -> f64 {
    let time = u.time();
    let mut best: f64 = 0.0;
    for k in k0..k1.min(time.steps()) {
        let dt = time.step(k);
        let (a, b) = (u.nodes_at(k), u.nodes_at(k + 1));
        let slope = match nodes {
            Some(list) => list.iter().fold(0.0f64, |m, &i| m.max((b[i] - a[i]).abs())),
            None => a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((y - x).abs())),
        };
        best = best.max(slope / dt);
    }
    best
}

/// Three-point second difference on a non-uniform lattice.
pub(crate) fn second_time_difference(t: [f64; 3], u: [f64; 3]) -> f64 {
    let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
    2.0 * ((u[2] - u[1]) / h1 - (u[1] - u[0]) / h0) / (h0 + h1)
}

/// `max` over interior time nodes and space nodes of `t_k² D²_t u(t_k, z)`.
pub fn time_semiconcavity_estimate(u: &GridFunction) -> Result<f64> {
    let time = u.time();
    if time.len() < 3 {
        return Err(Error::TooFewTimeNodes {
            needed: 3,
            found: time.len(),
        });
    }
    let mut best = f64::NEG_INFINITY;
    for k in 1..time.steps() {
        let ts = [time.t(k - 1), time.t(k), time.t(k + 1)];
        let (a, b, c) = (u.nodes_at(k - 1), u.nodes_at(k), u.nodes_at(k + 1));
        let w = ts[1] * ts[1];
        for i in 0..a.len() {
            best = best.max(w * second_time_difference(ts, [a[i], b[i], c[i]]));
        }
    }
    Ok(best)
}

fn find_time_node(time: &TimeGrid, t: f64) -> Result<usize> {
    time.nodes()
        .iter()
        .position(|s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
        .ok_or_else(|| Error::OutOfRange(alloc::format!("t = {t} is not a time node")))
}

/// Integral of the piecewise-linear interpolant of `values` over `[a, b]`.
fn integrate_linear(time: &TimeGrid, values: &[f64], a: f64, b: f64) -> f64 {
    let at = |t: f64| {
        let (k, w) = time.locate(t).expect("range checked by caller");
        (1.0 - w) * values[k] + w * values[k + 1]
    };
    let mut total = 0.0;
    let mut lo = a;
    for k in 0..time.steps() {
        let (t0, t1) = (time.t(k), time.t(k + 1));
        if t1 <= lo || t0 >= b {
            continue;
        }
        let hi = t1.min(b);
        total += 0.5 * (hi - lo) * (at(lo) + at(hi));
        lo = hi;
    }
    total
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubmeanReport {
    pub average: f64,
    pub kappa_0: f64,
    pub center_value: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Approximate sub-mean value inequality on the tube
/// `[t_0 − ε, t_0 + ε] × B(z_0, r)`:
/// `margin = ⨍⨍ u + κ_0 ε − u(t_0, z_0)`.
pub fn submean_check(
    u: &GridFunction,
    t0: f64,
    z0: usize,
    eps: f64,
    r: f64,
    tol: f64,
) -> Result<SubmeanReport> {
    let grid = u.space();
    let time = u.time();
    let k0 = find_time_node(time, t0)?;
    if !(eps > 0.0) || t0 - eps < 0.0 || t0 + eps > time.last() * (1.0 + 1e-14) {
        return Err(Error::OutOfRange(alloc::format!(
            "time window [{}, {}] leaves the grid",
            t0 - eps,
            t0 + eps
        )));
    }
    let center = grid.point(z0).to_vec();
    let dim = grid.dim();
    let h = grid.spacing();
    let reach = (r / h + 1e-9).floor() as i32;
    let base = grid.lattice_index(z0);
    let mut ball = Vec::new();
    let mut offset = [0i32; 4];
    let side = (2 * reach + 1) as usize;
    for flat in 0..side.pow(dim as u32) {
        let mut rem = flat;
        let mut dist = 0.0;
        for p in (0..dim).rev() {
            offset[p] = (rem % side) as i32 - reach;
            rem /= side;
            dist += (offset[p] as f64 * h).powi(2);
        }
        if dist > r * r * (1.0 + 1e-12) {
            continue;
        }
        let mut k = base;
        for p in 0..dim {
            k[p] += offset[p];
        }
        match grid.lookup(&k) {
            Some(node) => ball.push(node),
            None => {
                return Err(Error::OutOfRange(alloc::format!(
                    "ball of radius {r} around {center:?} leaves the grid"
                )))
            }
        }
    }
    let averages: Vec<f64> = (0..time.len())
        .map(|k| {
            let s = u.nodes_at(k);
            ball.iter().map(|&i| s[i]).sum::<f64>() / ball.len() as f64
        })
        .collect();
    let average = integrate_linear(time, &averages, t0 - eps, t0 + eps) / (2.0 * eps);
    let lo = time.locate(t0 - eps).map(|(k, _)| k).unwrap_or(0);
    let hi = time
        .locate(t0 + eps)
        .map(|(k, w)| if w > 0.0 { k + 1 } else { k })
        .unwrap_or(time.steps());
    let kappa_0 = max_time_slope(u, lo, hi.max(lo + 1), Some(&ball));
    let center_value = u.value(k0, z0);
    let margin = average + kappa_0 * eps - center_value;
    Ok(SubmeanReport {
        average,
        kappa_0,
        center_value,
        margin,
        pass: margin >= -tol,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SliceL1Report {
    pub lhs: f64,
    pub rhs: f64,
    pub kappa: f64,
    pub m: f64,
    pub space_time_l1: f64,
    pub pass: bool,
}

/// Compares `max_{t ∈ [T0, T1]} ‖u_t − v_t‖_{L¹}` with
/// `2M max{‖u − v‖_{L¹(Ω_{T1})}^{1/2}, ‖u − v‖_{L¹(Ω_{T1})}}`.
pub fn slice_l1_bound_check(
    u: &GridFunction,
    v: &GridFunction,
    t0: f64,
    t1: f64,
    s: f64,
    tol: f64,
) -> Result<SliceL1Report> {
    let diff = u.difference(v)?;
    let time = u.time();
    if !(0.0 < t0 && t0 < t1 && t1 < s && s <= time.last() * (1.0 + 1e-14)) {
        return Err(Error::OutOfRange(alloc::format!(
            "need 0 < T0 < T1 < S ≤ t_K, got {t0}, {t1}, {s}"
        )));
    }
    let grid = u.space();
    let cell = grid.cell_volume();
    let norms: Vec<f64> = (0..time.len())
        .map(|k| diff.nodes_at(k).iter().map(|x| x.abs()).sum::<f64>() * cell)
        .collect();
    let eps = 1e-12;
    let mut lhs: f64 = 0.0;
    for k in 0..time.len() {
        let t = time.t(k);
        if t >= t0 - eps && t <= t1 + eps {
            lhs = lhs.max(norms[k]);
        }
    }
    for t in [t0, t1] {
        let (k, w) = time.locate(t).expect("checked above");
        lhs = lhs.max((1.0 - w) * norms[k] + w * norms[k + 1]);
    }
    let space_time_l1 = integrate_linear(time, &norms, 0.0, t1);
    let k_lo = time.locate(t0).map(|(k, _)| k).unwrap_or(0);
    let k_hi = time
        .locate(s)
        .map(|(k, w)| if w > 0.0 { k + 1 } else { k })
        .unwrap_or(time.steps());
    let kappa = max_time_slope(&diff, k_lo, k_hi, None);
    let vol = grid.domain().volume();
    let m = (kappa * vol).sqrt().max(1.0 / (s - t1));
    let rhs = 2.0 * m * space_time_l1.sqrt().max(space_time_l1);
    Ok(SliceL1Report {
        lhs,
        rhs,
        kappa,
        m,
        space_time_l1,
        pass: lhs <= rhs * (1.0 + tol),
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BallDomain;
    use crate::ma_ops::HermitianDictionary;

    fn disc(h: f64) -> Arc<SpaceGrid> {
        Arc::new(SpaceGrid::build(BallDomain::new(1).unwrap(), h).unwrap())
    }

    #[test]
    fn lipschitz_of_linear_in_time() {
        let space = disc(0.25);
        let time = Arc::new(TimeGrid::uniform(1.0, 1.0, 4).unwrap());
        let a = core::f64::consts::LN_2;
        let u = GridFunction::from_fn(space, time, |t, _| a * t).unwrap();
        let k = time_lipschitz_estimate(&u).unwrap();
        assert!((k - 0.75 * a).abs() < 1e-14);
        assert!(time_semiconcavity_estimate(&u).unwrap().abs() < 1e-13);
    }

    #[test]
    fn semiconcavity_of_quadratics() {
        let space = disc(0.5);
        let time = Arc::new(TimeGrid::uniform(1.0, 1.0, 4).unwrap());
        let down = GridFunction::from_fn(space.clone(), time.clone(), |t, _| -t * t).unwrap();
        let up = GridFunction::from_fn(space, time, |t, _| t * t).unwrap();
        // The largest interior node is t_3 = 0.75, the smallest t_1 = 0.25.
        assert!((time_semiconcavity_estimate(&up).unwrap() - 2.0 * 0.75 * 0.75).abs() < 1e-12);
        assert!((time_semiconcavity_estimate(&down).unwrap() + 2.0 * 0.25 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn psh_margins_of_quadratics() {
        let grid = disc(0.125);
        let op = MaOperator::new(&grid, &HermitianDictionary::standard(1).unwrap()).unwrap();
        let tol = 10.0 * 0.125f64.powi(2) + 1e-9;
        let (n, t) = sample_slice(&grid, |x| x[0] * x[0] + x[1] * x[1]);
        let r = psh_check(&grid, Slice::new(&n, &t), &op, tol);
        assert!((r.min_margin - 1.0).abs() < 1e-10 && r.pass);
        let (n, t) = sample_slice(&grid, |x| x[0] * x[0] - x[1] * x[1]);
        let r = psh_check(&grid, Slice::new(&n, &t), &op, tol);
        assert!(r.min_margin.abs() < 1e-10 && r.pass);
    }
}
