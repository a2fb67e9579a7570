use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::hermitian::Hermitian;
use crate::{Error, Result};

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Finite family of unit-determinant positive Hermitian matrices.
///
/// For `n = 2` a unit-determinant positive matrix is
/// `cosh s · I + sinh s · (ω · σ)` for a unit vector `ω` and the Pauli
/// matrices `σ`; `s` is its hyperbolic distance to the identity. The default
/// ladder puts shells at `s = k · log r` and spreads directions over each
/// shell with a golden-angle spiral mirrored under complex conjugation.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HermitianDictionary {
    n: usize,
    matrices: Vec<Hermitian>,
    /// Hyperbolic radius of the region of normalized matrices the
    /// resolution refers to.
    radius: f64,
    resolution: f64,
}

impl HermitianDictionary {
    /// `{1}` for `n = 1`; 49 matrices (identity plus three shells of 16) for `n = 2`.
    pub fn standard(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Self::identity_only(1)),
            2 => Self::ladder(0.2, 3, 8),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    pub fn identity_only(n: usize) -> Self {
        HermitianDictionary {
            n,
            matrices: alloc::vec![Hermitian::identity(n)],
            radius: 0.0,
            resolution: 0.0,
        }
    }

    /// `n = 2` ladder with `shells` shells spaced by `log_r`, each carrying
    /// `half` directions in the upper hemisphere and their conjugates.
    pub fn ladder(log_r: f64, shells: usize, half: usize) -> Result<Self> {
        let mut matrices = alloc::vec![Hermitian::identity(2)];
        for shell in 1..=shells {
            let s = shell as f64 * log_r;
            let offset = shell as f64 * GOLDEN_ANGLE / 3.0;
            for i in 0..half {
                let y = (i as f64 + 0.5) / half as f64;
                let r = (1.0 - y * y).sqrt();
                let phi = offset + i as f64 * GOLDEN_ANGLE;
                let (x, z) = (r * phi.cos(), r * phi.sin());
                matrices.push(pauli_point(s, [x, y, z]));
                matrices.push(pauli_point(s, [x, -y, z]));
            }
        }
        Self::from_matrices(2, matrices, shells as f64 * log_r)
    }

    /// Validates the matrices and estimates the resolution over normalized
    /// matrices within hyperbolic distance `radius` of the identity.
    pub fn from_matrices(n: usize, matrices: Vec<Hermitian>, radius: f64) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        if matrices.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        for a in &matrices {
            if a.n() != n || !a.is_positive_definite() || (a.det() - 1.0).abs() > 1e-12 {
                return Err(Error::NotPositiveDefinite);
            }
        }
        let close = |a: &Hermitian, b: &Hermitian| {
            (0..n).all(|j| (0..n).all(|k| (a.get(j, k) - b.get(j, k)).norm() < 1e-12))
        };
        let identity = Hermitian::identity(n);
        if !matrices.iter().any(|a| close(a, &identity)) {
            return Err(Error::Precondition("dictionary must contain the identity".into()));
        }
        if !matrices
            .iter()
            .all(|a| matrices.iter().any(|b| close(&a.conj(), b)))
        {
            return Err(Error::Precondition(
                "dictionary must be closed under conjugation".into(),
            ));
        }
        let resolution = if n == 1 {
            0.0
        } else {
            covering_resolution(&matrices, radius)
        };
        Ok(HermitianDictionary {
            n,
            matrices,
            radius,
            resolution,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrices(&self) -> &[Hermitian] {
        &self.matrices
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// `ε` such that `min_A (1/n) tr(AH) ≤ (1 + ε) det(H)^{1/n}` whenever
    /// `H / det(H)^{1/n}` lies within [`coverage_radius`](Self::coverage_radius)
    /// of the identity.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn coverage_radius(&self) -> f64 {
        self.radius
    }

    /// `min_A (1/n) Re tr(A H)`.
    pub fn min_trace(&self, h: &Hermitian) -> f64 {
        let scale = 1.0 / self.n as f64;
        self.matrices
            .iter()
            .map(|a| scale * a.trace_product(h))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `cosh s · I + sinh s · (ω · σ)`.
pub(crate) fn pauli_point(s: f64, omega: [f64; 3]) -> Hermitian {
    let (c, sh) = (s.cosh(), s.sinh());
    Hermitian::two_by_two(
        c + sh * omega[2],
        Complex64::new(sh * omega[0], -sh * omega[1]),
        c - sh * omega[2],
    )
}

/// Pauli coordinates `(s, ω)` of a unit-determinant positive 2×2 matrix.
pub(crate) fn pauli_coordinates(a: &Hermitian) -> (f64, [f64; 3]) {
    let c = 0.5 * a.trace();
    let s = c.max(1.0).acosh();
    let sh = s.sinh();
    if sh < 1e-300 {
        return (0.0, [0.0, 0.0, 1.0]);
    }
    let b = a.get(0, 1);
    let z = 0.5 * (a.get(0, 0).re - a.get(1, 1).re) / sh;
    (s, [b.re / sh, -b.im / sh, z])
}

/// Upper bound for `cosh(covering radius) − 1` over the hyperbolic ball of
/// the given radius, from a dense sample plus the sample's own mesh width.
///
/// For unit-determinant `X = (s, ω)` and `A = (s_A, ν)`,
/// `½ tr(X A^{-1}) = cosh s cosh s_A − sinh s sinh s_A (ω · ν)`.
fn covering_resolution(matrices: &[Hermitian], radius: f64) -> f64 {
    if radius <= 0.0 {
        return 0.0;
    }
    let atoms: Vec<(f64, f64, [f64; 3])> = matrices
        .iter()
        .map(|a| {
            let (s, w) = pauli_coordinates(a);
            (s.cosh(), s.sinh(), w)
        })
        .collect();
    let radial = 48usize;
    let angular = 4096usize;
    let mut worst: f64 = 0.0;
    for i in 0..angular {
        let y = 1.0 - (2.0 * i as f64 + 1.0) / angular as f64;
        let r = (1.0 - y * y).sqrt();
        let phi = i as f64 * GOLDEN_ANGLE;
        let w = [r * phi.cos(), y, r * phi.sin()];
        for j in 0..=radial {
            let s = radius * j as f64 / radial as f64;
            let (cs, ss) = (s.cosh(), s.sinh());
            let best = atoms
                .iter()
                .map(|(ca, sa, v)| cs * ca - ss * sa * (w[0] * v[0] + w[1] * v[1] + w[2] * v[2]))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best.max(1.0).acosh());
        }
    }
    // Every point of the ball lies within this distance of a sample: half a
    // radial step plus the angular covering radius of the spiral at the rim.
    let angular_mesh = (4.0 * core::f64::consts::PI / angular as f64).sqrt();
    let mesh = 0.5 * radius / radial as f64 + radius.sinh() * angular_mesh;
    (worst + mesh).cosh() - 1.0
}
