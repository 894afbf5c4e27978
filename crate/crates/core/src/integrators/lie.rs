//! Lie splitting of the gradient flow `U' + ∇J(U) = 0`.
//!
//! One step first solves the implicit `Π` sub-step `V + τ ∇Π(V) = U^k`, then
//! the implicit penalty sub-step, which decouples into the cubics
//!
//! ```text
//! (τ/ε) x³ + (1 + cτ - τ/ε) x = v_i
//! ```
//!
//! The variable schedule multiplies `τ` by `θ` after every step taken with
//! `τ >= τ*`. Fixed points of the splitting are stationary for `J` only up to
//! `O(τ)`, so the stop rule here is the step test alone.

use std::time::Instant;

use super::{
    check_dims, escaped, Scheme, SchemeError, SchemeParams, SolveReport, Status, StopRule, TauMode,
    TrajPoint, Trajectory,
};
use crate::model::PenaltyModel;
use crate::scalar::{half_step, solve_cubic, MonotoneCubic, NewtonConfig, ScalarError};

/// Initial Lie step and whether the default had to be clamped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LieTau {
    pub tau0: f64,
    pub clamped: bool,
}

/// `τ0 = min(ε / (1 - εc), 0.1)`; when `εc >= 1` the first expression is
/// undefined and `τ0 = 0.1` is used with `clamped` set.
pub fn lie_tau0(model: &PenaltyModel, params: &SchemeParams) -> LieTau {
    if let Some(tau0) = params.tau0 {
        return LieTau {
            tau0,
            clamped: false,
        };
    }
    let eps = model.epsilon();
    let ec = eps * model.c();
    if ec >= 1.0 {
        LieTau {
            tau0: 0.1,
            clamped: true,
        }
    } else {
        LieTau {
            tau0: (eps / (1.0 - ec)).min(0.1),
            clamped: false,
        }
    }
}

/// `1 + cτ - τ/ε`, with rounding noise below zero snapped to zero.
fn linear_coeff(model: &PenaltyModel, tau: f64) -> f64 {
    let ratio = tau / model.epsilon();
    let a1 = 1.0 + model.c() * tau - ratio;
    if a1 < 0.0 && a1 >= -1e-12 * (1.0 + ratio) {
        0.0
    } else {
        a1
    }
}

/// One Lie step `U^k -> U^{k+1}` with step `tau`.
pub fn lie_step(
    model: &PenaltyModel,
    tau: f64,
    uk: &[f64],
    newton: &NewtonConfig,
) -> Result<Vec<f64>, ScalarError> {
    let half = half_step(model.pi(), tau, uk, newton)?;
    let a3 = tau / model.epsilon();
    let a1 = linear_coeff(model, tau);
    half.x
        .iter()
        .map(|&v| solve_cubic(MonotoneCubic::new(a3, a1, v), v))
        .collect()
}

pub fn lie_solve(
    model: &PenaltyModel,
    params: &SchemeParams,
    u0: &[f64],
) -> Result<SolveReport, SchemeError> {
    params.validate()?;
    check_dims(model, u0)?;
    let start = Instant::now();
    let LieTau { tau0, clamped } = lie_tau0(model, params);
    let tau_star = params.tau_star.unwrap_or(tau0 / 100.0);
    let radius = params.radius(model);

    let violated = |tau: f64, u: &[f64], k: usize| {
        let mut r = SolveReport::build(
            Scheme::Lie,
            Status::StepConditionViolated,
            model,
            u.to_vec(),
            k,
            tau,
        );
        r.tau_clamped = clamped;
        r.message = Some(format!(
            "step condition c + 1/tau >= 1/eps fails for tau = {tau:e}"
        ));
        r
    };
    if linear_coeff(model, tau0) < 0.0 {
        return Ok(violated(tau0, u0, 0));
    }

    let mut traj = params.keep_trajectory.then(Trajectory::default);
    if let Some(t) = traj.as_mut() {
        t.push(TrajPoint {
            k: 0,
            t: 0.0,
            tau: tau0,
            residual: model.residual_norm(u0),
            u: u0.to_vec(),
            v: None,
        });
    }

    let mut stop = StopRule::step_only(params);
    let mut uk = u0.to_vec();
    let mut tau = tau0;
    let mut time = 0.0;
    let mut k = 0;
    let status = loop {
        if k >= params.max_iters {
            break Status::MaxIters;
        }
        if linear_coeff(model, tau) < 0.0 {
            let mut r = violated(tau, &uk, k);
            r.trajectory = traj;
            return Ok(r);
        }
        let next =
            lie_step(model, tau, &uk, &params.newton).map_err(|source| SchemeError::Kernel {
                iteration: k + 1,
                source,
            })?;
        if escaped(&next, radius) {
            break Status::Diverged;
        }
        k += 1;
        time += tau;
        let res = model.residual_norm(&next);
        if let Some(t) = traj.as_mut() {
            t.push(TrajPoint {
                k,
                t: time,
                tau,
                residual: res,
                u: next.clone(),
                v: None,
            });
        }
        let done = stop.update(&uk, &next, res);
        uk = next;
        if done {
            break Status::Converged;
        }
        if params.tau_mode == TauMode::Variable && tau >= tau_star {
            tau *= params.theta;
        }
    };

    let mut r = SolveReport::build(Scheme::Lie, status, model, uk, k, tau);
    r.tau_clamped = clamped;
    r.trajectory = traj;
    r.wall_time = start.elapsed().as_secs_f64();
    Ok(r)
}
