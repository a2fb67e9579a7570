use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::domain::{BallDomain, SpaceGrid};
use crate::potentials::BoundaryData;
use crate::{Error, Result};

/// Density `g ≥ 0` sampled at the active nodes, with its declared `L^p` exponent.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Density {
    values: Vec<f64>,
    p: f64,
}

impl Density {
    pub fn new(values: Vec<f64>, p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::OutOfRange(alloc::format!("density exponent p = {p} must exceed 1")));
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeDensity { node, value });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("density"));
        }
        Ok(Density { values, p })
    }

    pub fn constant(grid: &SpaceGrid, c: f64) -> Result<Self> {
        Self::new(alloc::vec![c; grid.len()], f64::INFINITY)
    }

    /// Point samples of `f`; where a sample is not finite (an integrable
    /// singularity sitting on a node) the cell average is used instead.
    pub fn sample(grid: &SpaceGrid, f: impl Fn(&[f64]) -> f64, p: f64) -> Result<Self> {
        let dim = grid.dim();
        let h = grid.spacing();
        let sub: usize = if dim == 2 { 16 } else { 6 };
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                let v = f(x);
                if v.is_finite() {
                    return v;
                }
                let count = sub.pow(dim as u32);
                let mut total = 0.0;
                let mut y = [0.0; 4];
                for flat in 0..count {
                    let mut rem = flat;
                    for p in 0..dim {
                        let j = rem % sub;
                        rem /= sub;
                        y[p] = x[p] + h * ((j as f64 + 0.5) / sub as f64 - 0.5);
                    }
                    total += f(&y[..dim]);
                }
                total / count as f64
            })
            .collect();
        Self::new(values, p)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `g^{1/n}` per node.
    pub fn root(&self, n: usize) -> Vec<f64> {
        self.values.iter().map(|v| v.powf(1.0 / n as f64)).collect()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Fraction of nodes where `g = 0`.
    pub fn zero_fraction(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().filter(|v| **v == 0.0).count() as f64 / self.values.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum FFamily {
    Zero,
    /// `λ r + μ t + ψ(z)`.
    Affine { lambda: f64, mu: f64 },
    Custom,
}

pub type FFn = Arc<dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync>;

/// The nonlinearity `F(t, z, r)`, non-decreasing in `r`.
#[derive(Clone)]
pub struct FSpec {
    eval: FFn,
    pub kappa_f: f64,
    pub c_f: f64,
    pub family: FFamily,
}

impl core::fmt::Debug for FSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FSpec")
            .field("family", &self.family)
            .field("kappa_f", &self.kappa_f)
            .field("c_f", &self.c_f)
            .finish_non_exhaustive()
    }
}

impl FSpec {
    pub fn zero() -> Self {
        FSpec {
            eval: Arc::new(|_, _, _| 0.0),
            kappa_f: 0.0,
            c_f: 0.0,
            family: FFamily::Zero,
        }
    }

    pub fn affine(
        lambda: f64,
        mu: f64,
        psi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::OutOfRange(alloc::format!("λ = {lambda} must be non-negative")));
        }
        Ok(FSpec {
            eval: Arc::new(move |t, z, r| lambda * r + mu * t + psi(z)),
            kappa_f: lambda.max(mu.abs()),
            c_f: 0.0,
            family: FFamily::Affine { lambda, mu },
        })
    }

    pub fn custom(
        eval: impl Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static,
        kappa_f: f64,
        c_f: f64,
    ) -> Self {
        FSpec {
            eval: Arc::new(eval),
            kappa_f,
            c_f,
            family: FFamily::Custom,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, z: &[f64], r: f64) -> f64 {
        match self.family {
            FFamily::Zero => 0.0,
            _ => (self.eval)(t, z, r),
        }
    }

    /// `F` and `∂_r F`.
    #[inline]
    pub fn eval_with_slope(&self, t: f64, z: &[f64], r: f64) -> (f64, f64) {
        match self.family {
            FFamily::Zero => (0.0, 0.0),
            FFamily::Affine { lambda, .. } => ((self.eval)(t, z, r), lambda),
            FFamily::Custom => {
                let e = 1e-6 * (1.0 + r.abs());
                let (lo, hi) = ((self.eval)(t, z, r - e), (self.eval)(t, z, r + e));
                ((self.eval)(t, z, r), ((hi - lo) / (2.0 * e)).max(0.0))
            }
        }
    }

    /// Samples monotonicity in `r` and the declared `κ_F` on a probe lattice
    /// of times in `[0, T]`, values in `[−r_box, r_box]` and grid nodes.
    pub fn verify(&self, grid: &SpaceGrid, horizon: f64, r_box: f64) -> Result<()> {
        let steps = 8;
        let stride = (grid.len() / 32).max(1);
        for node in (0..grid.len()).step_by(stride) {
            let z = grid.point(node);
            for i in 0..=steps {
                let t = horizon * i as f64 / steps as f64;
                for j in 0..=steps {
                    let r = -r_box + 2.0 * r_box * j as f64 / steps as f64;
                    let f = self.eval(t, z, r);
                    if !f.is_finite() {
                        return Err(self.violation("F is not finite", t, z, f, f64::MAX));
                    }
                    if j > 0 {
                        let dr = 2.0 * r_box / steps as f64;
                        let prev = self.eval(t, z, r - dr);
                        if f < prev - 1e-9 {
                            return Err(self.violation("F decreases in r", t, z, prev - f, 1e-9));
                        }
                        let q = (f - prev).abs() / dr;
                        if q > self.kappa_f * (1.0 + 1e-9) + 1e-9 {
                            return Err(self.violation("|∂_r F| exceeds κ_F", t, z, q, self.kappa_f));
                        }
                    }
                    if i > 0 {
                        let dt = horizon / steps as f64;
                        let q = (f - self.eval(t - dt, z, r)).abs() / dt;
                        if q > self.kappa_f * (1.0 + 1e-9) + 1e-9 {
                            return Err(self.violation("|∂_t F| exceeds κ_F", t, z, q, self.kappa_f));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn violation(&self, what: &str, t: f64, z: &[f64], observed: f64, bound: f64) -> Error {
        Error::DataViolation {
            what: String::from(what),
            t,
            point: z.to_vec(),
            observed,
            bound,
        }
    }
}

/// One Cauchy–Dirichlet instance on a fixed space grid.
#[derive(Clone, Debug)]
pub struct FlowProblem {
    pub space: Arc<SpaceGrid>,
    /// Horizon `T`.
    pub horizon: f64,
    /// Solve up to `S < T`.
    pub solve_to: f64,
    pub g: Density,
    pub f: FSpec,
    pub h: BoundaryData,
}

impl FlowProblem {
    pub fn new(
        space: Arc<SpaceGrid>,
        horizon: f64,
        solve_to: f64,
        g: Density,
        f: FSpec,
        h: BoundaryData,
    ) -> Result<Self> {
        if !(0.0 < solve_to && solve_to < horizon && horizon.is_finite()) {
            return Err(Error::OutOfRange(alloc::format!(
                "need 0 < S < T, got S = {solve_to}, T = {horizon}"
            )));
        }
        if g.len() != space.len() {
            return Err(Error::GridMismatch("density samples"));
        }
        if g.zero_fraction() > 0.05 {
            log::warn!(
                "density vanishes on {:.1}% of the nodes",
                100.0 * g.zero_fraction()
            );
        }
        Ok(FlowProblem {
            space,
            horizon,
            solve_to,
            g,
            f,
            h,
        })
    }

    pub fn domain(&self) -> BallDomain {
        self.space.domain()
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    /// Same data with a shifted boundary: `h + c` laterally and `h_0 + c`.
    pub fn with_boundary(&self, h: BoundaryData) -> Self {
        FlowProblem {
            h,
            ..self.clone()
        }
    }
}
