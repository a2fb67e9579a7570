use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use pluriflow_core::domain::Neighbor;
use pluriflow_core::ma_ops::{
    complex_hessian_of_real, delta_a, harmonic_extension, solve_rho, SolverOptions,
};
use pluriflow_core::potentials::{
    psh_check, sample_slice, time_lipschitz_estimate, time_semiconcavity_estimate,
};
use pluriflow_core::transforms::mobius_map;
use pluriflow_core::{
    BallDomain, GridFunction, Hermitian, HermitianDictionary, MaOperator, Slice, SpaceGrid, TimeGrid,
};

fn grid(n: usize, h: f64) -> Arc<SpaceGrid> {
    Arc::new(SpaceGrid::build(BallDomain::new(n).unwrap(), h).unwrap())
}

fn steps() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.5, 1.0 / 3.0, 0.25, 0.2, 1.0 / 6.0, 0.125, 0.1])
}

/// Random real symmetric 4×4 matrix with entries in [−2, 2].
fn symmetric() -> impl Strategy<Value = [[f64; 4]; 4]> {
    prop::array::uniform10(-2.0..2.0f64).prop_map(|e| {
        let mut q = [[0.0; 4]; 4];
        let mut it = e.iter();
        for i in 0..4 {
            for j in i..4 {
                let v = *it.next().unwrap();
                q[i][j] = v;
                q[j][i] = v;
            }
        }
        q
    })
}

fn quadratic(q: &[[f64; 4]; 4], dim: usize) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| {
        let mut s = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                s += 0.5 * q[i][j] * x[i] * x[j];
            }
        }
        s
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mask_is_symmetric_under_reflections_and_swaps(n in 1usize..=2, h in steps()) {
        let g = grid(n, h);
        let dim = g.dim();
        for i in 0..g.len() {
            let k = g.lattice_index(i);
            for p in 0..dim {
                let mut r = k;
                r[p] = -r[p];
                let j = g.lookup(&r[..dim]).expect("reflected node is active");
                prop_assert_eq!(g.kind(j), g.kind(i));
            }
            let mut s = k;
            s.swap(0, 1);
            prop_assert_eq!(g.lookup(&s[..dim]).map(|j| g.kind(j)), Some(g.kind(i)));
        }
    }

    #[test]
    fn refinement_adds_nodes(h in steps()) {
        let coarse = grid(1, h);
        let fine = grid(1, h / 2.0);
        prop_assert!(fine.len() > coarse.len());
        // Every coarse node is a fine node.
        for i in 0..coarse.len() {
            let k = coarse.lattice_index(i);
            prop_assert!(fine.lookup(&[2 * k[0], 2 * k[1]]).is_some());
        }
    }

    #[test]
    fn delta_a_is_exact_on_quadratics(q in symmetric(), h in steps(), pick in 0usize..49) {
        let g = grid(2, h.min(0.25));
        let dict = HermitianDictionary::standard(2).unwrap();
        let a = &dict.matrices()[pick % dict.len()];
        let (nodes, trace) = sample_slice(&g, quadratic(&q, 4));
        let values = delta_a(&g, Slice::new(&nodes, &trace), a).unwrap();
        let expected = 0.5 * a.trace_product(&complex_hessian_of_real(2, &q));
        for v in values {
            prop_assert!((v - expected).abs() < 1e-10 * (1.0 + expected.abs()), "{} vs {}", v, expected);
        }
    }

    #[test]
    fn dictionary_minimum_dominates_the_determinant_root(
        a in 0.01..4.0f64, c in 0.01..4.0f64, re in -1.0..1.0f64, im in -1.0..1.0f64,
    ) {
        // Off-diagonal scaled inside the PSD cone.
        let bound = (a * c).sqrt();
        let h = Hermitian::two_by_two(a, Complex64::new(re, im) * (0.99 * bound / 2f64.sqrt()), c);
        let dict = HermitianDictionary::standard(2).unwrap();
        let root = h.det().sqrt();
        prop_assert!(dict.min_trace(&h) >= root * (1.0 - 1e-12));
    }

    #[test]
    fn lipschitz_estimate_is_subadditive(
        a in prop::collection::vec(-3.0..3.0f64, 6), b in prop::collection::vec(-3.0..3.0f64, 6),
    ) {
        let space = grid(1, 0.5);
        let time = Arc::new(TimeGrid::uniform(1.0, 0.75, 5).unwrap());
        let f = |c: &[f64]| {
            let c = c.to_vec();
            GridFunction::from_fn(space.clone(), time.clone(), move |t, x| {
                c[0] * t + c[1] * t * t + c[2] * (3.0 * t).sin() + x[0] * (c[3] * t + c[4] * t.sqrt()) + c[5] * x[1] * t
            })
            .unwrap()
        };
        let (u, v) = (f(&a), f(&b));
        let sum = u.zip_with(&v, |x, y| x + y).unwrap();
        let lhs = time_lipschitz_estimate(&sum).unwrap();
        let rhs = time_lipschitz_estimate(&u).unwrap() + time_lipschitz_estimate(&v).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn concave_in_time_has_nonpositive_semiconcavity(
        slopes in prop::collection::vec(0.0..2.0f64, 8), ratio in 1.05..1.6f64, levels in 0usize..5,
    ) {
        let space = grid(1, 0.5);
        let grading = if levels == 0 {
            pluriflow_core::domain::Grading::Uniform
        } else {
            pluriflow_core::domain::Grading::Geometric { ratio, levels }
        };
        let time = Arc::new(TimeGrid::with_grading(1.0, 0.75, 6, grading).unwrap());
        // Piecewise-linear concave profile: decreasing slopes on [0, 0.75].
        let mut s = slopes.clone();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let profile = move |t: f64| {
            let mut acc = 0.0;
            for (j, sl) in s.iter().enumerate() {
                let lo = 0.75 * j as f64 / s.len() as f64;
                let hi = 0.75 * (j + 1) as f64 / s.len() as f64;
                acc += sl * (t.min(hi) - lo).max(0.0);
            }
            acc - t * t
        };
        let u = GridFunction::from_fn(space, time, move |t, x| profile(t) + x[0]).unwrap();
        prop_assert!(time_semiconcavity_estimate(&u).unwrap() <= 1e-12);
    }

    #[test]
    fn max_of_slices_keeps_the_dominant_margin(shift in -0.6..0.6f64, beta in 0.5..3.0f64) {
        let g = grid(1, 0.125);
        let op = MaOperator::new(&g, &HermitianDictionary::standard(1).unwrap()).unwrap();
        let u = |x: &[f64]| beta * (x[0] * x[0] + x[1] * x[1]);
        let v = |x: &[f64]| 0.5 * (x[0] - shift).powi(2) + 0.5 * x[1] * x[1] + 0.3 * shift;
        let (un, ut) = sample_slice(&g, u);
        let (vn, vt) = sample_slice(&g, v);
        let mn: Vec<f64> = un.iter().zip(&vn).map(|(a, b)| a.max(*b)).collect();
        let mt: Vec<f64> = ut.iter().zip(&vt).map(|(a, b)| a.max(*b)).collect();
        let ru = op.ma_root(&g, Slice::new(&un, &ut));
        let rv = op.ma_root(&g, Slice::new(&vn, &vt));
        let rm = op.ma_root(&g, Slice::new(&mn, &mt));
        let value = |sl: (&[f64], &[f64]), nb: Neighbor| match nb {
            Neighbor::Node(j) => sl.0[j],
            Neighbor::Hit(j) => sl.1[j],
        };
        for i in 0..g.len() {
            let all = |first: bool| {
                let own = if first { un[i] > vn[i] } else { vn[i] > un[i] };
                own && (0..g.signed_count()).all(|s| {
                    let nb = g.neighbor(i, s);
                    let (a, b) = (value((&un, &ut), nb), value((&vn, &vt), nb));
                    if first { a > b } else { b > a }
                })
            };
            if all(true) {
                prop_assert_eq!(rm[i], ru[i]);
            } else if all(false) {
                prop_assert_eq!(rm[i], rv[i]);
            }
        }
        // Crossing nodes lose at most the kink contribution, which is positive.
        let report = psh_check(&g, Slice::new(&mn, &mt), &op, 1e-9);
        prop_assert!(report.pass);
    }

    #[test]
    fn harmonic_extension_obeys_the_maximum_principle(seed in prop::collection::vec(-5.0..5.0f64, 4)) {
        let g = grid(1, 0.125);
        let trace: Vec<f64> = g
            .hits()
            .iter()
            .map(|hit| {
                let (x, y) = (hit.point[0], hit.point[1]);
                seed[0] + seed[1] * x + seed[2] * x * y + seed[3] * (x * x - y * y) * (3.0 * y).cos()
            })
            .collect();
        let (lo, hi) = trace.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let (values, _) = harmonic_extension(&g, &trace, &SolverOptions::default()).unwrap();
        for v in values {
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
    }

    #[test]
    fn mobius_map_is_inverted_by_the_opposite_centre(
        a in prop::array::uniform4(-0.35..0.35f64), z in prop::array::uniform4(-0.49..0.49f64),
    ) {
        let w = mobius_map(&a, &z).unwrap();
        prop_assert!(w.iter().map(|v| v * v).sum::<f64>() < 1.0);
        let minus: Vec<f64> = a.iter().map(|v| -v).collect();
        let back = mobius_map(&minus, &w[..4]).unwrap();
        for p in 0..4 {
            prop_assert!((back[p] - z[p]).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn rho_is_monotone_in_the_density(c in 0.2..2.0f64, bump in 0.0..1.5f64, a in 0.0..1.0f64) {
        let g = grid(1, 0.125);
        let op = MaOperator::new(&g, &HermitianDictionary::standard(1).unwrap()).unwrap();
        let g1: Vec<f64> = (0..g.len()).map(|i| {
            let x = g.point(i);
            c + a * (x[0] * x[0] + x[1] * x[1])
        }).collect();
        let g2: Vec<f64> = g1.iter().map(|v| v + bump).collect();
        let opts = SolverOptions::default();
        let (r1, _) = solve_rho(&g, &op, &g1, f64::INFINITY, &opts).unwrap();
        let (r2, _) = solve_rho(&g, &op, &g2, f64::INFINITY, &opts).unwrap();
        for (x, y) in r1.iter().zip(&r2) {
            prop_assert!(*x >= *y - 1e-9);
        }
    }
}
