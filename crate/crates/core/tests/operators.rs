//! Grid operators against closed forms.

use bessel_riesz::grid::{
    apply_semigroup, eigenfunction, lp_norm, maximal_function, EigenfunctionSpec,
};
use bessel_riesz::riesz::{riesz_adjoint_apply, riesz_apply, Transform};
use bessel_riesz::{Grid, GridFunction, MultiIndex, NuVector, Spacing, SubordinationPlan};

fn plan() -> SubordinationPlan {
    SubordinationPlan {
        t_max: 100.0,
        nodes_per_decade: 8,
        transform: Transform::LogUniform,
        ..SubordinationPlan::default()
    }
}

fn eigen_on(nu: f64, lambda: f64, g: &Grid) -> GridFunction {
    let nu = NuVector::scalar(nu).unwrap();
    let spec = EigenfunctionSpec::new(vec![lambda]).unwrap();
    GridFunction::from_fn(g.clone(), |x| eigenfunction(&nu, &spec, x).unwrap())
}

// δ_ν φ_λ^ν = -λ φ_λ^{ν+1} and Δ_ν^{-1/2} φ_λ^ν = λ^{-1} φ_λ^ν
#[test]
fn first_order_riesz_maps_eigenfunctions_up_one_order() {
    let g = Grid::cube(Spacing::Logarithmic, 1e-3, 60.0, 800, 1).unwrap();
    for (nu, lambda) in [(0.7, 1.0), (1.5, 0.6)] {
        let f = eigen_on(nu, lambda, &g);
        let want = eigen_on(nu + 1.0, lambda, &g);
        let k = MultiIndex::new(vec![1]).unwrap();
        let out = riesz_apply(&NuVector::scalar(nu).unwrap(), &k, &f, &plan()).unwrap();
        let mut worst = 0.0_f64;
        for (i, x) in g.axes[0].nodes.iter().enumerate() {
            if (1.0..=20.0).contains(x) {
                worst = worst.max((out.values[i] + want.values[i]).abs());
            }
        }
        // grid error: 1.9e-3 at 800 nodes, 1.7e-4 at 1600
        assert!(worst < 4e-3, "nu={nu} lambda={lambda}: {worst}");
    }
}

#[test]
fn riesz_adjoint_pairs_with_the_transform() {
    let g = Grid::cube(Spacing::Logarithmic, 0.05, 20.0, 200, 1).unwrap();
    let nu = NuVector::scalar(0.8).unwrap();
    let k = MultiIndex::new(vec![2]).unwrap();
    let f = GridFunction::from_fn(g.clone(), |x| (-(x[0] - 3.0).powi(2)).exp());
    let h = GridFunction::from_fn(g, |x| x[0] * (-(x[0] - 6.0).powi(2) / 2.0).exp());
    // tail extrapolation beyond t_max is nonlinear, so push it out of reach
    let plan = SubordinationPlan {
        t_max: 1e6,
        ..plan()
    };
    let rf = riesz_apply(&nu, &k, &f, &plan).unwrap();
    let rh = riesz_adjoint_apply(&nu, &k, &h, &plan).unwrap();
    let a = rf.inner(&h).unwrap();
    let b = f.inner(&rh).unwrap();
    assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()), "{a} vs {b}");
}

#[test]
fn semigroup_contracts_sup_norm_above_half_order() {
    let g = Grid::cube(Spacing::Logarithmic, 0.01, 30.0, 300, 1).unwrap();
    let f = GridFunction::from_fn(g, |x| (2.0 * x[0]).sin() * (-x[0] / 8.0).exp());
    for nu in [0.5, 1.0, 3.0] {
        let nu = NuVector::scalar(nu).unwrap();
        for t in [1e-3, 0.1, 10.0] {
            let out = apply_semigroup(&nu, t, &f).unwrap();
            assert!(out.sup_norm() <= f.sup_norm() + 1e-8);
        }
    }
}

#[test]
fn maximal_function_dominates_every_time() {
    let g = Grid::cube(Spacing::Uniform, 0.5, 6.0, 80, 2).unwrap();
    let nu = NuVector::new(vec![0.2, 1.4]).unwrap();
    let f = GridFunction::from_fn(g, |x| (x[0] - x[1]).cos());
    let times = [0.01, 0.1, 1.0];
    let m = maximal_function(&nu, &f, &times).unwrap();
    for t in times {
        let e = apply_semigroup(&nu, t, &f).unwrap();
        assert!(m.values.iter().zip(&e.values).all(|(a, b)| *a >= b.abs()));
    }
    assert!(
        lp_norm(&m, 1.0).unwrap() >= lp_norm(&apply_semigroup(&nu, 1.0, &f).unwrap(), 1.0).unwrap()
    );
}
