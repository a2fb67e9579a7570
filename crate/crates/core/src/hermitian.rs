//! Small Hermitian matrices (n = 1, 2).

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Hermitian {
    n: usize,
    /// Row-major entries; only the leading `n × n` block is meaningful.
    m: [[Complex64; 2]; 2],
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl Hermitian {
    pub fn zero(n: usize) -> Self {
        assert!(n == 1 || n == 2, "unsupported dimension {n}");
        Hermitian {
            n,
            m: [[ZERO; 2]; 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, a: f64) -> Self {
        let mut h = Self::zero(n);
        for j in 0..n {
            h.m[j][j] = Complex64::new(a, 0.0);
        }
        h
    }

    pub fn one_by_one(a: f64) -> Self {
        let mut h = Self::zero(1);
        h.m[0][0] = Complex64::new(a, 0.0);
        h
    }

    /// `[[a11, a12], [conj(a12), a22]]`.
    pub fn two_by_two(a11: f64, a12: Complex64, a22: f64) -> Self {
        Hermitian {
            n: 2,
            m: [
                [Complex64::new(a11, 0.0), a12],
                [a12.conj(), Complex64::new(a22, 0.0)],
            ],
        }
    }

    /// Builds from an arbitrary complex matrix, keeping its Hermitian part.
    pub fn from_entries(n: usize, entries: &[[Complex64; 2]; 2]) -> Self {
        let mut h = Self::zero(n);
        for j in 0..n {
            for k in 0..n {
                h.m[j][k] = (entries[j][k] + entries[k][j].conj()) * 0.5;
            }
        }
        h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        debug_assert!(j < self.n && k < self.n);
        self.m[j][k]
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|j| self.m[j][j].re).sum()
    }

    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.m[0][0].re,
            _ => self.m[0][0].re * self.m[1][1].re - self.m[0][1].norm_sqr(),
        }
    }

    /// Eigenvalues in ascending order; for n = 1 both slots hold the single value.
    pub fn eigenvalues(&self) -> [f64; 2] {
        match self.n {
            1 => [self.m[0][0].re; 2],
            _ => {
                let a = self.m[0][0].re;
                let d = self.m[1][1].re;
                let mean = 0.5 * (a + d);
                let half = 0.5 * (a - d);
                let r = (half * half + self.m[0][1].norm_sqr()).sqrt();
                [mean - r, mean + r]
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue() > 0.0
    }

    /// `det(H_+)^{1/n}` where `H_+` keeps the non-negative part of the spectrum.
    pub fn det_root_clamped(&self) -> f64 {
        let ev = self.eigenvalues();
        match self.n {
            1 => ev[0].max(0.0),
            _ => (ev[0].max(0.0) * ev[1].max(0.0)).sqrt(),
        }
    }

    /// `Re tr(self · other)`.
    pub fn trace_product(&self, other: &Hermitian) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let mut s = 0.0;
        for j in 0..self.n {
            for k in 0..self.n {
                s += (self.m[j][k] * other.m[k][j]).re;
            }
        }
        s
    }

    pub fn conj(&self) -> Self {
        let mut h = *self;
        for row in h.m.iter_mut() {
            for e in row.iter_mut() {
                *e = e.conj();
            }
        }
        h
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut h = *self;
        for row in h.m.iter_mut() {
            for e in row.iter_mut() {
                *e *= a;
            }
        }
        h
    }

    pub fn add(&self, other: &Hermitian) -> Self {
        let mut h = *self;
        for j in 0..2 {
            for k in 0..2 {
                h.m[j][k] += other.m[j][k];
            }
        }
        h
    }

    /// Rescales a positive definite matrix to unit determinant.
    pub fn normalized(&self) -> Result<Self> {
        let d = self.det();
        if !self.is_positive_definite() || !(d > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(self.scaled(d.powf(-1.0 / self.n as f64)))
    }

    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(match self.n {
            1 => Self::one_by_one(1.0 / self.m[0][0].re),
            _ => Self::two_by_two(
                self.m[1][1].re / d,
                -self.m[0][1] / d,
                self.m[0][0].re / d,
            ),
        })
    }

    /// Hyperbolic distance between two unit-determinant positive matrices,
    /// measured through `½ tr(A B^{-1}) = cosh d` (n = 2). Zero for n = 1.
    pub fn hyperbolic_distance(&self, other: &Hermitian) -> Result<f64> {
        if self.n == 1 {
            return Ok(0.0);
        }
        let c = 0.5 * self.trace_product(&other.inverse()?);
        Ok(c.max(1.0).acosh())
    }
}
