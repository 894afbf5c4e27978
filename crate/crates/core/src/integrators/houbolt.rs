//! Houbolt scheme for `m U'' + γ U' + ∇J(U) = 0`.
//!
//! Second differences use the four-point Houbolt stencil, the damping term the
//! two-step backward difference, and the penalty part `(1/ε)(x³ - x)` is
//! implicit. `c U` and `∇Π` are evaluated at the extrapolation
//! `2 U^k - U^{k-1}`, so every coordinate of `U^{k+1}` solves its own cubic
//!
//! ```text
//! (1/ε) x³ + (2m/τ² + 3γ/(2τ) - 1/ε) x = rhs_i
//! ```

use std::time::Instant;

use super::{
    check_dims, escaped, Scheme, SchemeError, SchemeParams, SolveReport, Status, StopRule,
    TrajPoint, Trajectory,
};
use crate::model::PenaltyModel;
use crate::scalar::{solve_cubic, MonotoneCubic, ScalarError};

/// `τ0` if set, otherwise `√(2 m ε)`.
pub fn houbolt_tau(model: &PenaltyModel, params: &SchemeParams) -> f64 {
    params
        .tau0
        .unwrap_or_else(|| (2.0 * params.m * model.epsilon()).sqrt())
}

fn linear_coeff(model: &PenaltyModel, m: f64, gamma: f64, tau: f64) -> f64 {
    2.0 * m / (tau * tau) + 1.5 * gamma / tau - 1.0 / model.epsilon()
}

/// Closed-form first step `U¹` from `U⁰ = u0`, `U'(0) = v0`.
pub fn houbolt_startup(
    model: &PenaltyModel,
    m: f64,
    gamma: f64,
    tau: f64,
    u0: &[f64],
    v0: &[f64],
) -> Vec<f64> {
    let eps = model.epsilon();
    let c = model.c();
    let h = tau * tau / (2.0 * m);
    let mut g = vec![0.0; u0.len()];
    model.pi().gradient_into(u0, &mut g);
    u0.iter()
        .zip(v0)
        .zip(&g)
        .map(|((&u, &v), &gi)| {
            (tau - h * gamma) * v + (1.0 + h * (1.0 / eps - c)) * u - (h / eps) * u * u * u - h * gi
        })
        .collect()
}

/// `U^{k+1}` from `U^k`, `U^{k-1}`, `U^{k-2}`.
pub fn houbolt_step(
    model: &PenaltyModel,
    m: f64,
    gamma: f64,
    tau: f64,
    uk: &[f64],
    ukm1: &[f64],
    ukm2: &[f64],
) -> Result<Vec<f64>, ScalarError> {
    let n = uk.len();
    let a3 = 1.0 / model.epsilon();
    let a1 = linear_coeff(model, m, gamma, tau);
    let c = model.c();
    let mass = m / (tau * tau);
    let damp = gamma / (2.0 * tau);
    let extrap: Vec<f64> = uk.iter().zip(ukm1).map(|(a, b)| 2.0 * a - b).collect();
    let mut g = vec![0.0; n];
    model.pi().gradient_into(&extrap, &mut g);
    (0..n)
        .map(|i| {
            let rhs = mass * (5.0 * uk[i] - 4.0 * ukm1[i] + ukm2[i])
                + damp * (4.0 * uk[i] - ukm1[i])
                - c * extrap[i]
                - g[i];
            solve_cubic(MonotoneCubic::new(a3, a1, rhs), extrap[i])
        })
        .collect()
}

pub fn houbolt_solve(
    model: &PenaltyModel,
    params: &SchemeParams,
    u0: &[f64],
    v0: &[f64],
) -> Result<SolveReport, SchemeError> {
    params.validate()?;
    check_dims(model, u0)?;
    check_dims(model, v0)?;
    let start = Instant::now();
    let (m, gamma) = (params.m, params.gamma);
    let tau = houbolt_tau(model, params);

    if linear_coeff(model, m, gamma, tau) < 0.0 {
        let mut r = SolveReport::build(
            Scheme::Houbolt,
            Status::StepConditionViolated,
            model,
            u0.to_vec(),
            0,
            tau,
        );
        r.message = Some(format!(
            "step condition 2m/tau^2 + 3 gamma/(2 tau) >= 1/eps fails for tau = {tau:e}"
        ));
        return Ok(r);
    }

    let radius = params.radius(model);
    let mut traj = params.keep_trajectory.then(Trajectory::default);
    let record = |traj: &mut Option<Trajectory>, k: usize, u: &[f64], res: f64| {
        if let Some(t) = traj.as_mut() {
            t.push(TrajPoint {
                k,
                t: k as f64 * tau,
                tau,
                residual: res,
                u: u.to_vec(),
                v: None,
            });
        }
    };
    record(&mut traj, 0, u0, model.residual_norm(u0));

    let mut stop = StopRule::new(params);
    let u1 = houbolt_startup(model, m, gamma, tau, u0, v0);
    let um_1: Vec<f64> = u1.iter().zip(v0).map(|(u, v)| u - 2.0 * tau * v).collect();
    let (mut ukm2, mut ukm1, mut uk) = (um_1, u0.to_vec(), u1);
    let mut k = 1;
    let status = loop {
        if escaped(&uk, radius) {
            uk = ukm1.clone();
            k -= 1;
            break Status::Diverged;
        }
        let res = model.residual_norm(&uk);
        record(&mut traj, k, &uk, res);
        if stop.update(&ukm1, &uk, res) {
            break Status::Converged;
        }
        if k >= params.max_iters {
            break Status::MaxIters;
        }
        let next = houbolt_step(model, m, gamma, tau, &uk, &ukm1, &ukm2).map_err(|source| {
            SchemeError::Kernel {
                iteration: k + 1,
                source,
            }
        })?;
        ukm2 = std::mem::replace(&mut ukm1, std::mem::replace(&mut uk, next));
        k += 1;
    };

    let mut r = SolveReport::build(Scheme::Houbolt, status, model, uk, k, tau);
    r.trajectory = traj;
    r.wall_time = start.elapsed().as_secs_f64();
    Ok(r)
}
