//! Time-stepping schemes for the penalty flow
//! `m U'' + γ U' + ∇J(U) = 0` (Houbolt, RK45) and the gradient flow
//! `U' + ∇J(U) = 0` (Lie splitting).
//!
//! Every solver returns a [`SolveReport`]; trajectories are kept only when
//! [`SchemeParams::keep_trajectory`] is set.

mod houbolt;
mod lie;
mod multistart;
mod rk45;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PenaltyModel;
use crate::oracle::{delta, signs_lenient};
use crate::scalar::{NewtonConfig, ScalarError};

pub use houbolt::{houbolt_solve, houbolt_startup, houbolt_step, houbolt_tau};
pub use lie::{lie_solve, lie_step, lie_tau0, LieTau};
pub use multistart::{multistart, random_start, MultistartError, MultistartResult};
pub use rk45::{
    dopri5, dopri5_fixed, flow_rhs, rk45_solve, Dopri5End, Dopri5Options, Dopri5Result, Dopri5Stats,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Houbolt,
    Lie,
    Rk45,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Houbolt, Scheme::Lie, Scheme::Rk45];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Houbolt => "houbolt",
            Scheme::Lie => "lie",
            Scheme::Rk45 => "rk45",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "houbolt" => Ok(Scheme::Houbolt),
            "lie" => Ok(Scheme::Lie),
            "rk45" | "rk" => Ok(Scheme::Rk45),
            other => Err(format!("unknown scheme '{other}' (houbolt, lie, rk45)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauMode {
    Fixed,
    Variable,
}

impl FromStr for TauMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(TauMode::Fixed),
            "variable" => Ok(TauMode::Variable),
            other => Err(format!("unknown tau mode '{other}' (fixed, variable)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeParams {
    pub m: f64,
    pub gamma: f64,
    /// Initial step; `None` selects the scheme default.
    pub tau0: Option<f64>,
    pub theta: f64,
    /// Step floor of the variable schedule; `None` means `tau0 / 100`.
    pub tau_star: Option<f64>,
    /// Step schedule of the Lie scheme. Houbolt always uses a fixed step.
    pub tau_mode: TauMode,
    pub t_final: f64,
    pub tol_step: f64,
    /// Residual `‖∇J‖_∞` required, together with the step test, to stop the
    /// Houbolt scheme.
    pub tol_residual: f64,
    /// Consecutive small steps required to stop.
    pub patience: usize,
    pub max_iters: usize,
    /// `None` means `10 r`.
    pub diverge_radius: Option<f64>,
    pub rk_atol: f64,
    pub rk_rtol: f64,
    pub newton: NewtonConfig,
    pub keep_trajectory: bool,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            m: 1.0,
            gamma: 50.0,
            tau0: None,
            theta: 0.8,
            tau_star: None,
            tau_mode: TauMode::Variable,
            t_final: 1.0,
            tol_step: 1e-6,
            tol_residual: 1e-3,
            patience: 3,
            max_iters: 100_000,
            diverge_radius: None,
            rk_atol: 1e-6,
            rk_rtol: 1e-3,
            newton: NewtonConfig::default(),
            keep_trajectory: false,
        }
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |m: &str| Err(SchemeError::InvalidParams(m.to_string()));
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad("m must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive");
        }
        if let Some(t) = self.tau0 {
            if !(t > 0.0 && t.is_finite()) {
                return bad("tau0 must be positive");
            }
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad("theta must lie in (0, 1)");
        }
        if let Some(t) = self.tau_star {
            if !(t > 0.0) {
                return bad("tau_star must be positive");
            }
        }
        if !(self.t_final > 0.0) {
            return bad("t_final must be positive");
        }
        if !(self.tol_step > 0.0 && self.tol_residual > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.patience == 0 || self.max_iters == 0 {
            return bad("patience and max_iters must be at least 1");
        }
        if !(self.rk_atol > 0.0 && self.rk_rtol > 0.0) {
            return bad("RK tolerances must be positive");
        }
        Ok(())
    }

    pub fn radius(&self, model: &PenaltyModel) -> f64 {
        self.diverge_radius.unwrap_or(10.0 * model.r())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIters,
    Diverged,
    StepConditionViolated,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Converged => "converged",
            Status::MaxIters => "max_iters",
            Status::Diverged => "diverged",
            Status::StepConditionViolated => "step_condition_violated",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("initial state has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("iteration {iteration}: {source}")]
    Kernel {
        iteration: usize,
        #[source]
        source: ScalarError,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajPoint {
    pub k: usize,
    pub t: f64,
    pub tau: f64,
    pub residual: f64,
    pub u: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajPoint>,
}

impl Trajectory {
    pub fn push(&mut self, p: TrajPoint) {
        self.points.push(p);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn csv_header(n: usize) -> String {
        let mut h = String::from("k,t,tau,residual");
        for i in 0..n {
            h.push_str(&format!(",u_{i}"));
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let n = self.points.first().map_or(0, |p| p.u.len());
        let mut out = Self::csv_header(n);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!("{},{:e},{:e},{:e}", p.k, p.t, p.tau, p.residual));
            for x in &p.u {
                out.push_str(&format!(",{x:e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub scheme: Scheme,
    pub status: Status,
    /// Final iterate `U_ε`.
    pub u: Vec<f64>,
    pub rounded: Vec<f64>,
    pub delta: f64,
    /// `Π(rounded)`.
    pub objective: f64,
    /// `J_ε(U_ε)`.
    pub penalty: f64,
    pub residual: f64,
    /// Iterations (Houbolt, Lie) or accepted steps (RK45).
    pub iterations: usize,
    /// Rejected steps (RK45 only).
    pub rejected: usize,
    pub tau_final: f64,
    pub wall_time: f64,
    /// Set when the default Lie step had to be clamped.
    pub tau_clamped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

impl SolveReport {
    pub(crate) fn build(
        scheme: Scheme,
        status: Status,
        model: &PenaltyModel,
        u: Vec<f64>,
        iterations: usize,
        tau_final: f64,
    ) -> Self {
        let rounded = signs_lenient(&u);
        SolveReport {
            scheme,
            status,
            delta: delta(&u),
            objective: model.pi().value(&rounded),
            penalty: model.penalty_value(&u),
            residual: model.residual_norm(&u),
            rounded,
            u,
            iterations,
            rejected: 0,
            tau_final,
            wall_time: 0.0,
            tau_clamped: false,
            message: None,
            trajectory: None,
        }
    }

    /// Report standing in for a run that stopped with an error.
    pub fn failed(scheme: Scheme, model: &PenaltyModel, u0: &[f64], err: &SchemeError) -> Self {
        let mut r = Self::build(scheme, Status::Diverged, model, u0.to_vec(), 0, 0.0);
        r.message = Some(err.to_string());
        r
    }

    pub fn is_usable(&self) -> bool {
        matches!(self.status, Status::Converged | Status::MaxIters) && self.penalty.is_finite()
    }
}

/// Runs `scheme` from `(u0, v0)`; the Lie scheme ignores `v0`.
pub fn solve(
    scheme: Scheme,
    model: &PenaltyModel,
    params: &SchemeParams,
    u0: &[f64],
    v0: &[f64],
) -> Result<SolveReport, SchemeError> {
    match scheme {
        Scheme::Houbolt => houbolt_solve(model, params, u0, v0),
        Scheme::Lie => lie_solve(model, params, u0),
        Scheme::Rk45 => rk45_solve(model, params, u0, v0),
    }
}

pub(crate) fn check_dims(model: &PenaltyModel, v: &[f64]) -> Result<(), SchemeError> {
    if v.len() != model.nvars() {
        return Err(SchemeError::Dimension {
            expected: model.nvars(),
            got: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn escaped(u: &[f64], radius: f64) -> bool {
    u.iter().any(|x| !x.is_finite() || x.abs() > radius)
}

/// Step test over consecutive iterations, optionally combined with a
/// residual test.
pub(crate) struct StopRule {
    tol_step: f64,
    tol_residual: f64,
    patience: usize,
    streak: usize,
}

impl StopRule {
    pub(crate) fn new(p: &SchemeParams) -> Self {
        StopRule {
            tol_step: p.tol_step,
            tol_residual: p.tol_residual,
            patience: p.patience,
            streak: 0,
        }
    }

    pub(crate) fn step_only(p: &SchemeParams) -> Self {
        StopRule {
            tol_residual: f64::INFINITY,
            ..Self::new(p)
        }
    }

    pub(crate) fn update(&mut self, prev: &[f64], next: &[f64], residual: f64) -> bool {
        let step = prev
            .iter()
            .zip(next)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if step <= self.tol_step * inf_norm(prev).max(1.0) {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= self.patience && residual <= self.tol_residual
    }
}
