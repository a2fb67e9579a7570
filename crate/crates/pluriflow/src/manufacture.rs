//! Manufactured problems: the density and boundary data that make a chosen
//! smooth function the exact solution.

use std::sync::Arc;

use pluriflow_core::potentials::{psh_check, sample_slice};
use pluriflow_core::{BoundaryData, Density, FSpec, FlowProblem, MaOperator, Slice, SpaceGrid};

use crate::error::{Result, RunError};
use crate::families::Profile;

/// Number of times at which `g` is required to agree.
const TIME_PROBES: usize = 5;

/// `g = det(∂∂̄ u*) e^{−∂_t u* − F(t, z, u*)}` at the nodes, evaluated in closed
/// form. Fails unless `u*` has psh slices, a constant time slope and a
/// resulting `g` independent of `t`.
pub fn manufactured_density(exact: &Profile, f: &FSpec, grid: &SpaceGrid, horizon: f64) -> Result<Density> {
    let n = grid.n();
    match exact.is_psh() {
        Some(true) => {}
        Some(false) => return Err(RunError::Schema("exact solution has a slice that is not plurisubharmonic".into())),
        None => return Err(RunError::Schema("exact solution must be a closed-form radial family".into())),
    }
    let slope = exact
        .time_slope()
        .ok_or_else(|| RunError::Schema("exact solution must be affine in t".into()))?;
    let density = |t: f64, z: &[f64]| {
        let det = exact.ma_determinant(n, z).expect("closed-form family");
        det * (-slope - f.eval(t, z, exact.eval(t, z))).exp()
    };
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let z = grid.point(i);
        let g0 = density(0.0, z);
        for j in 1..TIME_PROBES {
            let t = horizon * j as f64 / TIME_PROBES as f64;
            let gt = density(t, z);
            if (gt - g0).abs() > 1e-12 * (1.0 + g0.abs()) {
                return Err(RunError::Schema(format!(
                    "manufactured density depends on t: g(0, z) = {g0}, g({t}, z) = {gt} at z = {z:?}"
                )));
            }
        }
        values.push(g0);
    }
    Density::new(values, f64::INFINITY).map_err(RunError::Data)
}

/// Builds the problem whose exact solution is `exact`, after checking its
/// initial slice with the discrete psh test.
pub fn manufacture(
    exact: &Profile,
    f: FSpec,
    space: Arc<SpaceGrid>,
    op: &MaOperator,
    horizon: f64,
    solve_to: f64,
) -> Result<FlowProblem> {
    let (nodes, trace) = sample_slice(&space, |z| exact.eval(0.0, z));
    let h = space.spacing();
    let report = psh_check(&space, Slice::new(&nodes, &trace), op, 10.0 * h * h + 1e-9);
    if !report.pass {
        return Err(RunError::Schema(format!(
            "exact solution fails the psh check: margin {:e} at node {:?}",
            report.min_margin, report.worst_node
        )));
    }
    let g = manufactured_density(exact, &f, &space, horizon)?;
    let (lat, init) = (exact.clone(), exact.clone());
    let c_h = exact.c_bound().unwrap_or(0.0);
    let bd = BoundaryData::new(
        move |t, z| lat.eval(t, z),
        move |z| init.eval(0.0, z),
        exact.kappa_bound(solve_to),
        c_h,
    );
    FlowProblem::new(space, horizon, solve_to, g, f, bd).map_err(RunError::Data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pluriflow_core::{BallDomain, HermitianDictionary};

    fn disc() -> Arc<SpaceGrid> {
        Arc::new(SpaceGrid::build(BallDomain::new(1).unwrap(), 0.125).unwrap())
    }

    #[test]
    fn scaled_quadratic_gives_unit_density() {
        let space = disc();
        for beta in [0.5, 2.0, 3.0] {
            let exact = Profile::RadialQuadratic {
                beta,
                slope: beta.ln(),
                c: 0.0,
            };
            let g = manufactured_density(&exact, &FSpec::zero(), &space, 1.0).unwrap();
            assert!(g.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn linear_f_with_compensating_time_term() {
        // u* = |z|² + t with F = r − t gives g = e^{−1 − |z|²}.
        let space = disc();
        let exact = Profile::RadialQuadratic {
            beta: 1.0,
            slope: 1.0,
            c: 0.0,
        };
        let f = FSpec::affine(1.0, -1.0, |_| 0.0).unwrap();
        let g = manufactured_density(&exact, &f, &space, 1.0).unwrap();
        for i in 0..space.len() {
            let r: f64 = space.point(i).iter().map(|x| x * x).sum();
            assert!((g.values()[i] - (-1.0 - r).exp()).abs() < 1e-14);
        }
        // With F = r alone the density would depend on t.
        let f = FSpec::affine(1.0, 0.0, |_| 0.0).unwrap();
        assert!(manufactured_density(&exact, &f, &space, 1.0).is_err());
    }

    #[test]
    fn non_psh_exact_is_rejected() {
        let space = disc();
        let op = MaOperator::new(&space, &HermitianDictionary::standard(1).unwrap()).unwrap();
        let exact = Profile::RadialQuadratic {
            beta: -1.0,
            slope: 0.0,
            c: 0.0,
        };
        assert!(manufacture(&exact, FSpec::zero(), space, &op, 1.0, 0.5).is_err());
    }
}
