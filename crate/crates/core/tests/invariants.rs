//! Property tests for identities that hold exactly or to rounding.

use bessel_riesz::grid::lp_norm;
use bessel_riesz::heat::{heat_kernel_1d, HeatKernelExpansion};
use bessel_riesz::report::relative_drift;
use bessel_riesz::spaces::{
    minimizing_polynomial, validate_f_atom, vitali_covering, BoxDomain, FAtomKind,
};
use bessel_riesz::special::{besseli, besseli_ratio, besseli_scaled, gamma, BesselOrder};
use bessel_riesz::{Ball, Grid, GridFunction, PolyND, Spacing, Verdict};
use proptest::prelude::*;

fn order(a: f64) -> BesselOrder {
    BesselOrder::new(a).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn higher_orders_are_dominated(a in -0.49f64..8.0, z in 0.0f64..200.0) {
        let lo = besseli_scaled(order(a + 1.0), z).unwrap();
        let hi = besseli_scaled(order(a), z).unwrap();
        prop_assert!(lo <= hi);
    }

    #[test]
    fn three_term_recurrence(a in -0.49f64..8.0, z in 0.01f64..60.0) {
        let i0 = besseli_scaled(order(a), z).unwrap();
        let i1 = besseli_scaled(order(a + 1.0), z).unwrap();
        let i2 = besseli_scaled(order(a + 2.0), z).unwrap();
        prop_assert!(close(i0 - i2, 2.0 * (a + 1.0) * i1 / z, 1e-12));
    }

    #[test]
    fn ratio_matches_plain_value(a in -0.49f64..5.0, z in 0.05f64..30.0) {
        let r = besseli_ratio(order(a), z).unwrap();
        prop_assert!(close(r * z.powf(a), besseli(order(a), z).unwrap(), 1e-12));
    }

    #[test]
    fn gamma_recurrence(x in 0.05f64..30.0) {
        prop_assert!(close(gamma(x + 1.0), x * gamma(x), 1e-12));
    }

    #[test]
    fn kernel_is_symmetric_and_scales(
        nu in -0.49f64..4.0,
        t in 0.01f64..10.0,
        x in 0.05f64..10.0,
        y in 0.05f64..10.0,
        lambda in 0.2f64..5.0,
    ) {
        let p = heat_kernel_1d(nu, t, x, y).unwrap();
        prop_assume!(p > 1e-250);
        prop_assert!(close(p, heat_kernel_1d(nu, t, y, x).unwrap(), 1e-13));
        let scaled = heat_kernel_1d(nu, lambda * lambda * t, lambda * x, lambda * y).unwrap();
        prop_assert!(close(lambda * scaled, p, 1e-12));
    }

    // δ_ν p^ν = -(x/2t) p^ν + (y/2t) p^{ν+1}
    #[test]
    fn first_delta_raises_the_order(
        nu in -0.49f64..4.0,
        t in 0.01f64..10.0,
        x in 0.05f64..10.0,
        y in 0.05f64..10.0,
    ) {
        let p0 = heat_kernel_1d(nu, t, x, y).unwrap();
        prop_assume!(p0 > 1e-250);
        let p1 = heat_kernel_1d(nu + 1.0, t, x, y).unwrap();
        let want = (-x * p0 + y * p1) / (2.0 * t);
        let got = HeatKernelExpansion::delta_power(nu, 1).eval(t, x, y);
        let scale = (x * p0 + y * p1) / (2.0 * t);
        prop_assert!((got - want).abs() <= 1e-12 * scale);
    }

    #[test]
    fn polynomials_are_their_own_projection(
        c in proptest::collection::vec(-2.0f64..2.0, 6),
        cx in 2.5f64..3.5,
        cy in 2.5f64..3.5,
        r in 0.1f64..0.4,
    ) {
        let g = Grid::cube(Spacing::Uniform, 2.0, 4.0, 61, 2).unwrap();
        let p = PolyND::from_monomials(2, 2, c).unwrap();
        let f = GridFunction::from_fn(g.clone(), |x| p.eval(x));
        let ball = Ball::new(vec![cx, cy], r).unwrap();
        let q = minimizing_polynomial(&f, &ball, 2).unwrap();
        let scale = f.sup_norm().max(1.0);
        for i in 0..g.len() {
            let x = g.node(i);
            if ball.contains(&x) {
                prop_assert!((q.eval(&x) - p.eval(&x)).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn coverings_partition_unity(lo in 0.3f64..4.0, width in 0.5f64..6.0, nodes in 50usize..300) {
        let g = Grid::cube(Spacing::Logarithmic, lo, lo + width, nodes, 1).unwrap();
        let c = vitali_covering(&BoxDomain::cube(lo, lo + width, 1).unwrap(), &g).unwrap();
        prop_assert!(c.partition_error() <= 1e-12);
        prop_assert!(c.fifth_balls_disjoint());
        prop_assert!(c.supports_ok());
    }

    #[test]
    fn haar_functions_are_f_atoms(start in 5usize..40, half in 1usize..20) {
        let g = Grid::cube(Spacing::Uniform, 0.025, 3.975, 80, 1).unwrap();
        let len = 2.0 * half as f64 * 0.05;
        let f = GridFunction::from_fn(g.clone(), |x| {
            let i = ((x[0] - 0.025) / 0.05).round() as usize;
            if i < start || i >= start + 2 * half {
                0.0
            } else if i < start + half {
                1.0 / len
            } else {
                -1.0 / len
            }
        });
        let v = validate_f_atom(&f).unwrap();
        prop_assert_eq!(v.verdict, Verdict::Valid);
        prop_assert_eq!(v.kind, Some(FAtomKind::MeanZero));
    }

    #[test]
    fn lp_norms_are_homogeneous(c in 0.1f64..10.0, p in 0.5f64..4.0) {
        let g = Grid::cube(Spacing::Logarithmic, 0.1, 5.0, 50, 1).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0].sin());
        let scaled = f.map(|v| c * v);
        prop_assert!(close(lp_norm(&scaled, p).unwrap(), c * lp_norm(&f, p).unwrap(), 1e-12));
    }

    #[test]
    fn drift_is_scale_free(cs in proptest::collection::vec(0.1f64..10.0, 2..5), k in 0.01f64..100.0) {
        let scaled: Vec<f64> = cs.iter().map(|c| c * k).collect();
        prop_assert!((relative_drift(&cs) - relative_drift(&scaled)).abs() <= 1e-12);
    }
}
