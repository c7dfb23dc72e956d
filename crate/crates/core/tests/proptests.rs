mod common;

use irk_core::linop::{fov_upper_bound, CsrMatrix, DenseOperator, InnerKind, LinearOperator};
use irk_core::spectral::{adjugate_row_polynomials, EigenPair};
use irk_core::tableaux::{build_tableau, Family};
use irk_core::verify::{compute_kappa, random_stable_matrix};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn scheme() -> impl Strategy<Value = (Family, usize)> {
    prop::sample::select(common::all_schemes())
}

fn relaxation() -> impl Strategy<Value = InnerKind> {
    prop_oneof![
        Just(InnerKind::Exact),
        Just(InnerKind::ExactBanded),
        Just(InnerKind::ExactSparseLu),
        (1usize..64).prop_map(InnerKind::Jacobi),
        (1usize..64).prop_map(InnerKind::GaussSeidel),
    ]
}

fn inner_kind() -> impl Strategy<Value = InnerKind> {
    prop_oneof![
        relaxation(),
        (1e-14f64..0.99, 1usize..1000, relaxation()).prop_map(|(tol, max_iters, base)| {
            InnerKind::InnerKrylov {
                tol,
                max_iters,
                base: Box::new(base),
            }
        }),
    ]
}

proptest! {
    #[test]
    fn eigenpair_invariants(eta in 1e-3f64..50.0, beta in 0.0f64..50.0) {
        let p = EigenPair::new(eta, beta);
        prop_assert!(p.gamma_star >= eta && p.gamma_star >= beta);
        prop_assert!((p.gamma_star.powi(2) - (eta * eta + beta * beta)).abs() <= 1e-12 * p.gamma_star.powi(2));
        prop_assert!(p.kappa_bound >= 1.0);
        prop_assert!((p.kappa_bound.powi(2) - (1.0 + (beta / eta).powi(2))).abs() <= 1e-10 * p.kappa_bound.powi(2));
    }

    #[test]
    fn inner_kind_round_trips(kind in inner_kind()) {
        let text = kind.to_string();
        let back: InnerKind = text.parse().unwrap();
        prop_assert_eq!(back, kind);
    }

    #[test]
    fn family_names_round_trip(f in prop::sample::select(Family::ALL.to_vec())) {
        prop_assert_eq!(f.name().parse::<Family>().unwrap(), f);
        prop_assert_eq!(f.name().to_uppercase().parse::<Family>().unwrap(), f);
    }

    #[test]
    fn stage_polynomials_satisfy_the_scalar_identity(
        (family, s) in scheme(),
        x in -20.0f64..-0.01,
        f in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        // x < 0 keeps B - x I nonsingular (the eigenvalues of B lie in Re > 0)
        let t = build_tableau(family, s).unwrap();
        let b = t.a().clone().try_inverse().unwrap();
        let w = b.transpose() * t.b();
        let shifted = &b - DMatrix::identity(s, s) * x;
        let det = shifted.determinant();
        let fv = DVector::from_iterator(s, f.iter().copied().take(s));
        let oracle = det * w.dot(&shifted.lu().solve(&fv).unwrap());
        let vals = adjugate_row_polynomials(&t).unwrap().eval(x);
        let ours: f64 = vals.iter().zip(fv.iter()).map(|(r, f)| r * f).sum();
        prop_assert!((ours - oracle).abs() <= 1e-9 * det.abs().max(1.0), "{} vs {}", ours, oracle);
    }

    #[test]
    fn csr_apply_is_linear(
        entries in prop::collection::vec((0usize..9, 0usize..9, -5.0f64..5.0), 0..40),
        x in prop::collection::vec(-1.0f64..1.0, 9),
        y in prop::collection::vec(-1.0f64..1.0, 9),
        a in -3.0f64..3.0,
    ) {
        let m = CsrMatrix::from_triplets(9, &entries);
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();
        let lhs = m.apply_vec(&mix);
        let (mx, my) = (m.apply_vec(&x), m.apply_vec(&y));
        for i in 0..9 {
            prop_assert!((lhs[i] - (a * mx[i] + my[i])).abs() <= 1e-12 * (1.0 + lhs[i].abs()));
        }
    }

    #[test]
    fn field_of_values_bounds_the_spectral_abscissa(seed in 0u64..1000, n in 2usize..20) {
        let mut r = common::rng(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
        let bound = fov_upper_bound(&DenseOperator::new(m.clone()).unwrap()).unwrap();
        let abscissa = m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(abscissa <= bound + 1e-10);
    }

    #[test]
    fn conditioning_bound_holds_for_random_pairs(
        seed in 0u64..500,
        eta in 0.2f64..5.0,
        ratio in 0.0f64..4.0,
        skew in 0.0f64..1.0,
    ) {
        let beta = ratio * eta;
        let g = eta.hypot(beta);
        let mut r = common::rng(seed);
        let l = random_stable_matrix(12, 10.0, skew, &mut r);
        let c = compute_kappa(&l, eta, beta, g, g).unwrap();
        prop_assert!(c.kappa_measured <= c.kappa_bound * (1.0 + 1e-10));
    }
}
