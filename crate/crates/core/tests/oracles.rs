//! Solver outputs checked against independently computed answers.

mod common;

use boolflow::integrators::{
    dopri5, flow_rhs, houbolt_startup, houbolt_step, houbolt_tau, multistart, solve, Dopri5Options,
    Scheme, SchemeParams, Status, TauMode,
};
use boolflow::model::{suggest_c, BooleanProblem, PenaltyModel};
use boolflow::oracle::{
    bound_certificate, errobj, exhaustive_min, sign_alignment_check, BoundCertificate,
    SignAlignment, DEFAULT_MAX_N,
};
use boolflow::polynomial::{random_poly, InstanceSpec, SparsePoly};
use boolflow::rng::rng_from_seed;
use boolflow::scalar::{half_step, NewtonConfig};
use common::{fd_gradient, instance, model, norm2, rel_err, reversed_min};
use rand::Rng;

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut rng = rng_from_seed(101);
    for k in 0..60u64 {
        let n = rng.gen_range(1..=8);
        let d = rng.gen_range(1..=6);
        let m = model(n, d, 1000 + k, 1e-3, 10.0);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.2..1.2)).collect();
        let pi = m.pi();
        let g = pi.eval_gradient(&x).unwrap();
        assert!(rel_err(&g, &fd_gradient(|y| pi.value(y), &x, 1e-6)) <= 1e-6);
        let gj = m.penalty_gradient(&x);
        assert!(rel_err(&gj, &fd_gradient(|y| m.penalty_value(y), &x, 1e-6)) <= 1e-6);
    }
}

#[test]
fn hessian_matches_differences_of_gradient() {
    let pi = instance(5, 4, 33);
    let x = [0.3, -0.7, 0.1, 0.9, -0.4];
    let h = pi.hessian_at(&x);
    for j in 0..5 {
        let col = fd_gradient(
            |y| {
                let mut g = vec![0.0; 5];
                pi.gradient_into(y, &mut g);
                g[j]
            },
            &x,
            1e-6,
        );
        let hj: Vec<f64> = (0..5).map(|i| h[(j, i)]).collect();
        assert!(rel_err(&hj, &col) <= 1e-6);
    }
}

#[test]
fn monte_carlo_respects_ball_bounds() {
    let mut rng = rng_from_seed(7);
    for seed in 0..12u64 {
        let n = 2 + (seed as usize % 5);
        let pi = instance(n, 3 + (seed as u32 % 3), seed);
        let r = 1.5 * (n as f64).sqrt();
        let g_bound = pi.grad_norm_bound(r);
        let h_bound = pi.hessian_infnorm_bound(r);
        for _ in 0..300 {
            let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let scale = r * rng.gen_range(0.0f64..1.0).powf(1.0 / n as f64) / norm2(&dir);
            let v: Vec<f64> = dir.iter().map(|x| x * scale).collect();
            assert!(norm2(&pi.eval_gradient(&v).unwrap()) <= g_bound * (1.0 + 1e-12));
            let h = pi.hessian_at(&v);
            let inf = (0..n)
                .map(|i| (0..n).map(|j| h[(i, j)].abs()).sum::<f64>())
                .fold(0.0, f64::max);
            assert!(inf <= h_bound * (1.0 + 1e-12));
        }
    }
}

#[test]
fn reversed_enumeration_agrees() {
    for seed in 0..30u64 {
        let n = 1 + (seed as usize % 10);
        let pi = random_poly(&InstanceSpec::new(n, 2 + (seed as u32 % 4), 500 + seed)).unwrap();
        let fwd = exhaustive_min(&pi, DEFAULT_MAX_N).unwrap();
        let (value, optima) = reversed_min(&pi);
        assert_eq!(fwd.value, value);
        assert_eq!(fwd.count as usize, optima.len());
        assert!(optima.contains(&fwd.u_star));
        let least = optima
            .iter()
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();
        assert_eq!(&fwd.u_star, least);
    }
}

#[test]
fn oracle_is_thread_count_independent() {
    let pi = instance(16, 3, 5);
    let run = |t| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| exhaustive_min(&pi, DEFAULT_MAX_N).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn errobj_zero_exactly_on_optimal_set() {
    for seed in 0..10u64 {
        let m = model(6, 4, 900 + seed, 1e-4, 100.0);
        let p = SchemeParams::default();
        let r = solve(Scheme::Houbolt, &m, &p, &[0.0; 6], &[0.0; 6]).unwrap();
        let oracle = exhaustive_min(m.pi(), DEFAULT_MAX_N).unwrap();
        let (_, optima) = reversed_min(m.pi());
        let e = errobj(m.pi(), &r.u, &oracle);
        assert!(e >= 0.0);
        assert_eq!(e == 0.0, optima.contains(&r.rounded));
    }
}

#[test]
fn half_step_is_the_fixed_point_of_the_explicit_map() {
    let pi = instance(4, 4, 12);
    let u = [0.4, -0.6, 0.2, 0.8];
    let tau = 1e-3;
    let sol = half_step(&pi, tau, &u, &NewtonConfig::default()).unwrap();
    let mut v = u.to_vec();
    let mut g = vec![0.0; 4];
    for _ in 0..200 {
        pi.gradient_into(&v, &mut g);
        v = u.iter().zip(&g).map(|(a, b)| a - tau * b).collect();
    }
    assert!(rel_err(&sol.x, &v) <= 1e-10);
}

#[test]
fn houbolt_startup_is_the_taylor_step() {
    let m = model(4, 4, 3, 1e-3, 10.0);
    let (mass, gamma) = (2.0, 5.0);
    let tau = 1e-3;
    let u0 = [0.2, -0.5, 0.9, 0.0];
    let v0 = [0.1, 0.3, -0.2, 1.0];
    let grad = m.penalty_gradient(&u0);
    let expect: Vec<f64> = (0..4)
        .map(|i| u0[i] + tau * v0[i] + 0.5 * tau * tau * (-gamma * v0[i] - grad[i]) / mass)
        .collect();
    let got = houbolt_startup(&m, mass, gamma, tau, &u0, &v0);
    assert!(rel_err(&got, &expect) <= 1e-14);
}

#[test]
fn houbolt_step_satisfies_the_discrete_equation() {
    let m = model(5, 4, 21, 1e-4, 100.0);
    let p = SchemeParams::default();
    let tau = houbolt_tau(&m, &p);
    let (mass, gamma, eps, c) = (p.m, p.gamma, m.epsilon(), m.c());
    let a = [0.1, -0.2, 0.3, 0.05, -0.4];
    let b = [0.12, -0.21, 0.28, 0.07, -0.38];
    let cc = [0.15, -0.25, 0.26, 0.02, -0.36];
    let x = houbolt_step(&m, mass, gamma, tau, &cc, &b, &a).unwrap();
    let ext: Vec<f64> = (0..5).map(|i| 2.0 * cc[i] - b[i]).collect();
    let g = m.pi().eval_gradient(&ext).unwrap();
    for i in 0..5 {
        let acc = mass * (2.0 * x[i] - 5.0 * cc[i] + 4.0 * b[i] - a[i]) / (tau * tau);
        let vel = gamma * (3.0 * x[i] - 4.0 * cc[i] + b[i]) / (2.0 * tau);
        let force = (x[i].powi(3) - x[i]) / eps + c * ext[i] + g[i];
        let scale = (mass / (tau * tau)).max(1.0 / eps);
        assert!((acc + vel + force).abs() <= 1e-10 * scale, "coordinate {i}");
    }
}

#[test]
fn dopri5_on_damped_oscillator() {
    // y'' + 2ζω y' + ω² y = 0 with ζ = 0.1, ω = 3
    let (z, w) = (0.1f64, 3.0f64);
    let wd = w * (1.0 - z * z).sqrt();
    let exact = |t: f64| (-z * w * t).exp() * ((wd * t).cos() + z * w / wd * (wd * t).sin());
    let opts = Dopri5Options {
        atol: 1e-10,
        rtol: 1e-10,
        ..Dopri5Options::default()
    };
    let res = dopri5(
        |_, y, dy| {
            dy[0] = y[1];
            dy[1] = -2.0 * z * w * y[1] - w * w * y[0];
        },
        0.0,
        &[1.0, 0.0],
        4.0,
        &opts,
        |_, _, _, _| true,
    );
    assert!((res.y[0] - exact(4.0)).abs() <= 1e-8);
}

#[test]
fn flow_rhs_is_the_first_order_system() {
    let m = model(3, 4, 8, 1e-3, 10.0);
    let y = [0.2, -0.4, 0.7, 0.5, -0.1, 0.0];
    let mut dy = [0.0; 6];
    flow_rhs(&m, 2.0, 5.0, &y, &mut dy);
    let g = m.penalty_gradient(&y[..3]);
    for i in 0..3 {
        assert_eq!(dy[i], y[3 + i]);
        let expect = (-5.0 * y[3 + i] - g[i]) / 2.0;
        assert!((dy[3 + i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
    }
}

#[test]
fn sparsity_keeps_the_expected_share_of_candidates() {
    for (n, d, s) in [(6, 4, 0.5), (8, 5, 0.3), (10, 3, 0.8)] {
        let spec = InstanceSpec::new(n, d, 77).with_sparsity(s);
        let pool = spec.candidate_count() as f64;
        let got = random_poly(&spec).unwrap().len() as f64;
        let sd = (pool * s * (1.0 - s)).sqrt();
        assert!(
            (got - pool * s).abs() <= 5.0 * sd + 1.0,
            "{got} vs {}",
            pool * s
        );
    }
    let full = InstanceSpec::new(4, 3, 1);
    assert_eq!(
        random_poly(&full).unwrap().len() as u64,
        full.candidate_count()
    );
}

#[test]
fn sign_alignment_against_enumeration() {
    let mut rng = rng_from_seed(55);
    for _ in 0..100 {
        let u: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
        assert_eq!(sign_alignment_check(&u), SignAlignment::Holds);
    }
}

#[test]
fn certificate_degenerates_without_regularization() {
    let m = model(4, 4, 2, 1e-4, 0.0);
    let cert = bound_certificate(&m);
    let g = m.pi().grad_norm_bound(m.r());
    assert!((cert.bound - 4e-4 * g).abs() <= 1e-12 * cert.bound);
    assert_eq!(cert, BoundCertificate::from_parts(1e-4, 0.0, 4, m.r(), g));
}

#[test]
fn more_starts_never_worsen_errobj() {
    let p = SchemeParams {
        tau_mode: TauMode::Fixed,
        ..SchemeParams::default()
    };
    for seed in 0..4u64 {
        let m = model(8, 5, 300 + seed, 1e-4, 100.0);
        let oracle = exhaustive_min(m.pi(), DEFAULT_MAX_N).unwrap();
        for scheme in [Scheme::Houbolt, Scheme::Lie] {
            let Ok(ms) = multistart(scheme, &m, &p, 25, seed) else {
                continue;
            };
            let best = ms.best_report();
            let single = &ms.reports[0];
            if !single.is_usable() {
                continue;
            }
            // best-of-25 minimizes J over a superset containing start 0
            assert!(best.penalty <= single.penalty);
            let e_best = errobj(m.pi(), &best.u, &oracle);
            let e_single = errobj(m.pi(), &single.u, &oracle);
            assert!(
                e_best <= e_single,
                "{scheme} seed {seed}: {e_best} > {e_single}"
            );
        }
    }
}

#[test]
fn binary_domain_problem_matches_sign_form() {
    let p = instance(3, 3, 4);
    let b = BooleanProblem::from_binary(p.clone());
    let m = PenaltyModel::new(b, 1e-4, 100.0).unwrap();
    let r = solve(
        Scheme::Houbolt,
        &m,
        &SchemeParams::default(),
        &[0.0; 3],
        &[0.0; 3],
    )
    .unwrap();
    assert_eq!(r.status, Status::Converged);
    let x: Vec<f64> = r.rounded.iter().map(|s| (1.0 + s) / 2.0).collect();
    assert_eq!(p.value(&x), r.objective);
}

/// Sums terms last to first, expanding each power as repeated products.
fn reference_value(p: &SparsePoly, v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for t in p.terms().iter().rev() {
        let mut prod = t.coef;
        for &(i, e) in t.exps.pairs() {
            for _ in 0..e {
                prod *= v[i as usize];
            }
        }
        acc += prod;
    }
    acc
}

#[test]
fn evaluation_matches_reversed_reference() {
    let pi = instance(4, 5, 42);
    let v = [0.5, -0.5, 1.0, 0.0];
    let scale = pi.terms().iter().map(|t| t.coef.abs()).sum::<f64>();
    assert!((pi.value(&v) - reference_value(&pi, &v)).abs() <= 1e-13 * scale);

    let mut rng = rng_from_seed(42);
    for seed in 0..20u64 {
        let m = model(5, 4, seed, 1e-3, 100.0);
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let mut expect = reference_value(m.pi(), &x);
        for xi in x.iter().rev() {
            expect += (xi * xi - 1.0).powi(2) / (4.0 * 1e-3) + 50.0 * xi * xi;
        }
        let got = m.penalty_value(&x);
        assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    }
}

#[test]
fn suggested_c_dominates_sampled_spectral_radius() {
    let mut rng = rng_from_seed(41);
    for seed in 0..5u64 {
        let n = 3 + seed as usize;
        let problem = BooleanProblem::from_pm1(instance(n, 4, 900 + seed));
        let r = 1.2 * (n as f64).sqrt();
        let c = suggest_c(&problem, r);
        for _ in 0..2000 {
            let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let scale = r * rng.gen_range(0.0f64..1.0).powf(1.0 / n as f64) / norm2(&dir);
            let v: Vec<f64> = dir.iter().map(|x| x * scale).collect();
            let eig = problem.pm1().hessian_at(&v).symmetric_eigen().eigenvalues;
            let rho = eig.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(rho <= c * (1.0 + 1e-12));
        }
    }
}

#[test]
fn residual_keeps_falling_along_converging_houbolt_runs() {
    let params = SchemeParams {
        tau_mode: TauMode::Fixed,
        ..SchemeParams::default()
    };
    let longer = SchemeParams {
        tol_residual: 1e-6,
        keep_trajectory: true,
        ..params.clone()
    };
    let mut converged = 0;
    for seed in 0..10u64 {
        let n = 2 + seed as usize % 5;
        let m = model(n, 4, 300 + seed, 1e-4, 100.0);
        let zero = vec![0.0; n];
        if solve(Scheme::Houbolt, &m, &params, &zero, &zero)
            .unwrap()
            .status
            != Status::Converged
        {
            continue;
        }
        converged += 1;
        let r = solve(Scheme::Houbolt, &m, &longer, &zero, &zero).unwrap();
        let traj = r.trajectory.unwrap();
        let min = traj
            .points
            .iter()
            .map(|p| p.residual)
            .fold(f64::INFINITY, f64::min);
        assert!(min < 1e-4, "seed {seed}: smallest residual {min:e}");
    }
    assert!(converged >= 8);
}
