use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use super::{multilinear, space_interp_tol, Interpolant, TransformReport, BASE_TOL};
use crate::flow::FlowProblem;
use crate::potentials::GridFunction;
use crate::{Error, Result};

fn to_complex(x: &[f64]) -> ([Complex64; 2], usize) {
    let n = x.len() / 2;
    let mut z = [Complex64::new(0.0, 0.0); 2];
    for j in 0..n {
        z[j] = Complex64::new(x[2 * j], x[2 * j + 1]);
    }
    (z, n)
}

fn inner(z: &[Complex64], a: &[Complex64]) -> Complex64 {
    z.iter().zip(a).map(|(z, a)| z * a.conj()).sum()
}

/// The ball automorphism
/// `T_a(z) = (P_a z − a + √(1 − |a|²)(z − P_a z)) / (1 − ⟨z, a⟩)`, with
/// `P_a z = ⟨z, a⟩ a / |a|²`, in real coordinates `(x₁, y₁, x₂, y₂)`.
pub fn mobius_map(a: &[f64], z: &[f64]) -> Result<[f64; 4]> {
    if a.len() != z.len() || !(a.len() == 2 || a.len() == 4) {
        return Err(Error::GridMismatch("point dimensions"));
    }
    let a2: f64 = a.iter().map(|v| v * v).sum();
    if !(a2 < 1.0) {
        return Err(Error::PointOutsideBall { norm: a2.sqrt() });
    }
    let mut out = [0.0; 4];
    if a2 == 0.0 {
        out[..z.len()].copy_from_slice(z);
        return Ok(out);
    }
    let (zc, n) = to_complex(z);
    let (ac, _) = to_complex(a);
    let w = inner(&zc[..n], &ac[..n]);
    let s = (1.0 - a2).sqrt();
    let denom = Complex64::new(1.0, 0.0) - w;
    for j in 0..n {
        let p = w * ac[j] / a2;
        let v = (p - ac[j] + (zc[j] - p) * s) / denom;
        out[2 * j] = v.re;
        out[2 * j + 1] = v.im;
    }
    Ok(out)
}

/// `log |det T_a'(z)|² = (n + 1)(log(1 − |a|²) − 2 log|1 − ⟨z, a⟩|)`.
pub fn mobius_jacobian_log(a: &[f64], z: &[f64]) -> f64 {
    let (zc, n) = to_complex(z);
    let (ac, _) = to_complex(a);
    let a2: f64 = a.iter().map(|v| v * v).sum();
    let w = inner(&zc[..n], &ac[..n]);
    (n as f64 + 1.0) * ((1.0 - a2).ln() - 2.0 * (Complex64::new(1.0, 0.0) - w).norm().ln())
}

/// Measured pieces of the Möbius constant, each per unit `|a|²`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MobiusConstants {
    /// `max (V_a − h) / ((t + 1)|a|²)` over the lateral boundary and
    /// `max (V_a − h_0) / |a|²` at `t = 0`.
    pub boundary: f64,
    /// `max −½(θ(a, z) + θ(−a, z)) / |a|²` with `θ` the log Jacobian.
    pub jacobian: f64,
    /// `max (F(t, z, V_a) − ½ Σ_± F(t, T_{±a} z, U(t, T_{±a} z))) / |a|²`.
    pub f: f64,
    /// `max (G(z) − ½ Σ_± G(T_{±a} z)) / |a|²` with `G = log g`.
    pub g: f64,
    /// `max(boundary, jacobian + f + g)`, floored at 0.
    pub c_mob: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MobiusReport {
    pub a_norm: f64,
    pub constants: MobiusConstants,
    /// `max 2(V_a − U)/|a|²` over `|z| ≤ witness_radius`.
    pub witness_max: f64,
    pub witness_radius: f64,
    /// Nodes where an image fell outside the interpolation cells; `V_a = U` there.
    pub excluded_nodes: usize,
    /// Dominance of `V_a − (T + 1) C_mob |a|²` below `U`.
    pub report: TransformReport,
}

/// `V_a = ½(U ∘ T_a + U ∘ T_{−a})` with the measured constant `C_mob` and
/// the second-difference witness `2(V_a − U)/|a|²` on `|z| ≤ witness_radius`.
pub fn mobius_average(
    u: &GridFunction,
    a: &[f64],
    problem: &FlowProblem,
    witness_radius: f64,
) -> Result<(GridFunction, MobiusReport)> {
    let grid = u.space();
    let dim = grid.dim();
    if a.len() != dim {
        return Err(Error::GridMismatch("Möbius centre dimension"));
    }
    let a2: f64 = a.iter().map(|v| v * v).sum();
    if a2.sqrt() > 0.5 {
        return Err(Error::OutOfRange(alloc::format!("|a| = {} exceeds 1/2", a2.sqrt())));
    }
    let neg: Vec<f64> = a.iter().map(|v| -v).collect();
    let horizon = u.time().horizon();
    let it = Interpolant::new(u);
    let images: Vec<([f64; 4], [f64; 4])> = (0..grid.len())
        .map(|i| Ok((mobius_map(a, grid.point(i))?, mobius_map(&neg, grid.point(i))?)))
        .collect::<Result<_>>()?;
    let g = problem.g.values();

    let mut excluded = alloc::vec![false; grid.len()];
    let mut values = Vec::with_capacity(u.values().len());
    let mut trace = Vec::with_capacity(u.trace().len());
    let mut c_f = f64::NEG_INFINITY;
    for k in 0..u.time().len() {
        let t = u.time().t(k);
        let slice = it.slice(k);
        for i in 0..grid.len() {
            let (p, m) = (&images[i].0[..dim], &images[i].1[..dim]);
            match (slice.eval(p), slice.eval(m)) {
                (Some(up), Some(um)) => {
                    let v = 0.5 * (up + um);
                    if a2 > 0.0 {
                        let mean_f = 0.5 * (problem.f.eval(t, p, up) + problem.f.eval(t, m, um));
                        c_f = c_f.max((problem.f.eval(t, grid.point(i), v) - mean_f) / a2);
                    }
                    values.push(v);
                }
                _ => {
                    excluded[i] = true;
                    values.push(u.value(k, i));
                }
            }
        }
        for hit in grid.hits() {
            let z = &hit.point[..dim];
            let hp = (problem.h.lateral)(t, &mobius_map(a, z)?[..dim]);
            let hm = (problem.h.lateral)(t, &mobius_map(&neg, z)?[..dim]);
            trace.push(0.5 * (hp + hm));
        }
    }
    let v = GridFunction::new(grid.clone(), u.time().clone(), values, trace)?;
    let excluded_nodes = excluded.iter().filter(|e| **e).count();

    let constants = if a2 == 0.0 {
        MobiusConstants {
            boundary: 0.0,
            jacobian: 0.0,
            f: 0.0,
            g: 0.0,
            c_mob: 0.0,
        }
    } else {
        let mut boundary = f64::NEG_INFINITY;
        for k in 0..u.time().len() {
            let t = u.time().t(k);
            for (j, hit) in grid.hits().iter().enumerate() {
                let h = (problem.h.lateral)(t, &hit.point[..dim]);
                boundary = boundary.max((v.trace_at(k)[j] - h) / ((t + 1.0) * a2));
            }
        }
        let mut jacobian = f64::NEG_INFINITY;
        let mut cg = f64::NEG_INFINITY;
        for i in 0..grid.len() {
            let z = grid.point(i);
            let (p, m) = (&images[i].0[..dim], &images[i].1[..dim]);
            let h0 = 0.5 * ((problem.h.initial)(p) + (problem.h.initial)(m));
            boundary = boundary.max((h0 - (problem.h.initial)(z)) / a2);
            let theta = 0.5 * (mobius_jacobian_log(a, z) + mobius_jacobian_log(&neg, z));
            jacobian = jacobian.max(-theta / a2);
            if g[i] > 0.0 {
                if let (Some(gp), Some(gm)) = (multilinear(grid, g, p), multilinear(grid, g, m)) {
                    let mean = if gp > 0.0 && gm > 0.0 {
                        0.5 * (gp.ln() + gm.ln())
                    } else {
                        f64::NEG_INFINITY
                    };
                    cg = cg.max((g[i].ln() - mean) / a2);
                }
            }
        }
        let jacobian = jacobian.max(0.0);
        let f = c_f.max(0.0);
        let g = cg.max(0.0);
        let boundary = boundary.max(0.0);
        MobiusConstants {
            boundary,
            jacobian,
            f,
            g,
            c_mob: boundary.max(jacobian + f + g),
        }
    };
    log::info!("Möbius constant at |a| = {:.4}: {constants:?}", a2.sqrt());

    let shift = (horizon + 1.0) * constants.c_mob * a2;
    let mut margin = f64::INFINITY;
    let mut worst = (0, 0);
    let mut witness_max = f64::NEG_INFINITY;
    for k in 0..u.time().len() {
        for i in 0..grid.len() {
            if excluded[i] {
                continue;
            }
            let diff = v.value(k, i) - u.value(k, i);
            if -(diff - shift) < margin {
                margin = shift - diff;
                worst = (k, i);
            }
            let z2: f64 = grid.point(i).iter().map(|x| x * x).sum();
            if a2 > 0.0 && z2 <= witness_radius * witness_radius {
                witness_max = witness_max.max(2.0 * diff / a2);
            }
        }
    }
    let tol = BASE_TOL + space_interp_tol(u);
    let report = TransformReport {
        transform: "mobius".into(),
        margin,
        worst,
        constant: constants.c_mob,
        tol,
        residual: None,
        pass: margin >= -tol,
    };
    Ok((
        v,
        MobiusReport {
            a_norm: a2.sqrt(),
            constants,
            witness_max: if a2 > 0.0 { witness_max } else { 0.0 },
            witness_radius,
            excluded_nodes,
            report,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn centre_goes_to_origin() {
        let a = [0.3, 0.0];
        let t = mobius_map(&a, &a).unwrap();
        assert!(norm(&t[..2]) < 1e-15);
        let a = [0.1, -0.2, 0.3, 0.05];
        let t = mobius_map(&a, &a).unwrap();
        assert!(norm(&t) < 1e-14);
    }

    #[test]
    fn disc_formula_and_sphere() {
        // (z − a)/(1 − āz) at a = 0.5, z = 1.
        let t = mobius_map(&[0.5, 0.0], &[1.0, 0.0]).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-15 && t[1].abs() < 1e-15);
        let (a, z) = ([0.2, 0.3], [0.4, -0.1]);
        let t = mobius_map(&a, &z).unwrap();
        let zc = Complex64::new(z[0], z[1]);
        let ac = Complex64::new(a[0], a[1]);
        let expected = (zc - ac) / (1.0 - ac.conj() * zc);
        assert!((t[0] - expected.re).abs() < 1e-15 && (t[1] - expected.im).abs() < 1e-15);
    }

    #[test]
    fn zero_centre_is_identity() {
        let z = [0.1, 0.2, -0.3, 0.4];
        assert_eq!(&mobius_map(&[0.0; 4], &z).unwrap(), &z);
    }

    #[test]
    fn rejects_centre_outside() {
        assert!(mobius_map(&[1.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn jacobian_matches_disc_derivative() {
        let (a, z) = ([0.2, 0.3], [0.4, -0.1]);
        let zc = Complex64::new(z[0], z[1]);
        let ac = Complex64::new(a[0], a[1]);
        // d/dz (z − a)/(1 − āz) = (1 − |a|²)/(1 − āz)².
        let d = (1.0 - ac.norm_sqr()) / ((1.0 - ac.conj() * zc) * (1.0 - ac.conj() * zc));
        assert!((mobius_jacobian_log(&a, &z) - d.norm_sqr().ln()).abs() < 1e-13);
    }
}
