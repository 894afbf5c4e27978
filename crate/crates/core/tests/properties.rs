mod common;

use boolflow::integrators::{dopri5_fixed, lie_step, Scheme, SchemeParams, TauMode};
use boolflow::model::{BooleanProblem, PenaltyModel};
use boolflow::oracle::{delta, exhaustive_min, index_to_signs, round_to_signs, DEFAULT_MAX_N};
use boolflow::polynomial::{random_poly, Exponents, InstanceFile, InstanceSpec, SparsePoly};
use boolflow::rng::derive_seed;
use boolflow::scalar::{solve_cubic, MonotoneCubic, NewtonConfig, ScalarError};
use common::{fd_gradient, rel_err};
use proptest::prelude::*;

fn small_poly() -> impl Strategy<Value = SparsePoly> {
    (1usize..5, 1u32..5, any::<u64>(), 0.3f64..=1.0).prop_map(|(n, d, seed, s)| {
        random_poly(&InstanceSpec::new(n, d, seed).with_sparsity(s)).unwrap()
    })
}

fn point(n: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-r..r, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_operations_commute_with_evaluation(
        (p, q, x) in (1usize..4).prop_flat_map(|n| (
            (1u32..4, any::<u64>()).prop_map(move |(d, s)| random_poly(&InstanceSpec::new(n, d, s)).unwrap()),
            (1u32..4, any::<u64>()).prop_map(move |(d, s)| random_poly(&InstanceSpec::new(n, d, s)).unwrap()),
            point(n, 1.5),
        ))
    ) {
        let (a, b) = (p.value(&x), q.value(&x));
        let tol = 1e-9 * (1.0 + a.abs() + b.abs()).powi(2);
        prop_assert!(((&p + &q).value(&x) - (a + b)).abs() <= tol);
        prop_assert!(((&p - &q).value(&x) - (a - b)).abs() <= tol);
        prop_assert!(((&p * &q).value(&x) - a * b).abs() <= tol);
        prop_assert!((p.scale(-2.5).value(&x) + 2.5 * a).abs() <= tol);
    }

    #[test]
    fn affine_change_round_trips(p in small_poly(), seed in any::<u64>()) {
        let back = p.compose_affine(2.0, -1.0).compose_affine(0.5, 0.5);
        let n = p.nvars();
        let x: Vec<f64> = (0..n).map(|i| ((derive_seed(seed, &[i as u64]) % 2000) as f64 / 1000.0) - 1.0).collect();
        prop_assert!((back.value(&x) - p.value(&x)).abs() <= 1e-8 * (1.0 + p.value(&x).abs()));
    }

    #[test]
    fn binary_and_sign_forms_agree_on_vertices(p in small_poly(), idx in any::<u64>()) {
        let b = BooleanProblem::from_binary(p.clone());
        let n = p.nvars();
        let s = index_to_signs(idx % (1 << n), n);
        let x: Vec<f64> = s.iter().map(|v| (1.0 + v) / 2.0).collect();
        prop_assert!((b.pm1().value(&s) - p.value(&x)).abs() <= 1e-9 * (1.0 + p.value(&x).abs()));
    }

    #[test]
    fn gradient_matches_central_differences(
        (p, x) in small_poly().prop_flat_map(|p| { let n = p.nvars(); (Just(p), point(n, 1.2)) })
    ) {
        let g = p.eval_gradient(&x).unwrap();
        let fd = fd_gradient(|y| p.value(y), &x, 1e-6);
        prop_assert!(rel_err(&g, &fd) <= 1e-6, "{g:?} vs {fd:?}");
    }

    #[test]
    fn penalty_gradient_matches_central_differences(
        (p, x) in small_poly().prop_flat_map(|p| { let n = p.nvars(); (Just(p), point(n, 1.2)) }),
        eps in 1e-3f64..1e-1,
        c in 0.0f64..100.0,
    ) {
        let m = PenaltyModel::new(BooleanProblem::from_pm1(p), eps, c).unwrap();
        let g = m.penalty_gradient(&x);
        let fd = fd_gradient(|y| m.penalty_value(y), &x, 1e-6);
        prop_assert!(rel_err(&g, &fd) <= 1e-6, "{g:?} vs {fd:?}");
    }

    #[test]
    fn cubic_root_within_tolerance(a3 in 1e-3f64..1e6, a1 in 0.0f64..1e6, rhs in -1e6f64..1e6, init in -1e3f64..1e3) {
        let cubic = MonotoneCubic::new(a3, a1, rhs);
        let x = solve_cubic(cubic, init).unwrap();
        prop_assert!(cubic.residual(x).abs() <= cubic.tolerance());
        prop_assert!(x.abs() <= cubic.bracket_radius());
        prop_assert!(x == 0.0 || x.signum() == rhs.signum());
    }

    #[test]
    fn non_monotone_cubics_rejected(a3 in 1e-3f64..1e3, a1 in -1e3f64..-1e-9, rhs in -10.0f64..10.0) {
        prop_assert!(
            matches!(solve_cubic(MonotoneCubic::new(a3, a1, rhs), 0.0), Err(ScalarError::NotMonotone { .. })),
            "accepted a non-monotone cubic"
        );
    }

    #[test]
    fn rounding_is_nearest_sign_vector(u in point(6, 2.0)) {
        let s = round_to_signs(&u).unwrap();
        let d = delta(&u);
        for idx in 0..64u64 {
            let cand = index_to_signs(idx, 6);
            let dc = u.iter().zip(&cand).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(d <= dc + 1e-15);
            if cand != s {
                prop_assert!(dc >= d);
            }
        }
    }

    #[test]
    fn oracle_value_is_a_lower_bound(p in small_poly(), idx in any::<u64>()) {
        let n = p.nvars();
        let o = exhaustive_min(&p, DEFAULT_MAX_N).unwrap();
        prop_assert!(o.value <= p.value(&index_to_signs(idx % (1 << n), n)));
        prop_assert_eq!(p.value(&o.u_star), o.value);
        prop_assert!(o.count >= 1);
    }

    #[test]
    fn lie_descends_without_objective(u in point(4, 1.8), eps in 1e-3f64..1e-1, c in 0.0f64..5.0) {
        let m = PenaltyModel::new(BooleanProblem::from_pm1(SparsePoly::zero(4)), eps, c).unwrap();
        let p = SchemeParams::default();
        let tau = boolflow::integrators::lie_tau0(&m, &p).tau0;
        let mut cur = u.clone();
        for _ in 0..10 {
            let next = lie_step(&m, tau, &cur, &NewtonConfig::default()).unwrap();
            prop_assert!(m.penalty_value(&next) <= m.penalty_value(&cur) + 1e-12);
            cur = next;
        }
    }

    #[test]
    fn instance_files_round_trip(p in small_poly(), seed in any::<u64>()) {
        let file = InstanceFile::from_poly(&p);
        let text = file.to_json();
        let back = InstanceFile::from_json(&text).unwrap();
        prop_assert_eq!(back.to_poly().unwrap(), p.clone());
        prop_assert_eq!(back.content_hash(), file.content_hash());
        prop_assert_eq!(derive_seed(seed, &[1, 2]), derive_seed(seed, &[1, 2]));
        prop_assert_ne!(derive_seed(seed, &[1, 2]), derive_seed(seed, &[2, 1]));
    }

    #[test]
    fn fixed_step_rk_keeps_constant_state(y0 in point(3, 5.0)) {
        let y = dopri5_fixed(|_, _, dy: &mut [f64]| dy.iter_mut().for_each(|v| *v = 0.0), 0.0, &y0, 1.0, 7);
        prop_assert_eq!(y, y0);
    }
}

#[test]
fn scheme_and_mode_names_parse() {
    for s in Scheme::ALL {
        assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
    }
    assert_eq!("variable".parse::<TauMode>().unwrap(), TauMode::Variable);
    assert!("quadratic".parse::<Scheme>().is_err());
}

#[test]
fn var_polynomial_gradient_is_unit_vector() {
    let p = SparsePoly::from_terms(3, [(Exponents::var(1, 1), 1.0)]).unwrap();
    assert_eq!(
        p.eval_gradient(&[0.3, -0.2, 0.9]).unwrap(),
        vec![0.0, 1.0, 0.0]
    );
}
