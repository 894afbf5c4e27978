//! Root finders used by the implicit schemes.
//!
//! [`solve_cubic`] handles `a3 x³ + a1 x = rhs` with `a3 > 0`, `a1 >= 0`. The
//! left side is strictly increasing, so the root is unique and lies in
//! `[-b, b]` with `b = max(|rhs| / max(a1, a3), cbrt(|rhs| / a3)) + 1`.
//! Newton steps are taken while they stay inside the current sign bracket;
//! otherwise the bracket is bisected.
//!
//! [`solve_coupled`] is a damped Newton method for square systems, used for
//! the implicit half-step `V + τ ∇Π(V) = U`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polynomial::SparsePoly;

#[derive(Debug, Error, PartialEq)]
pub enum ScalarError {
    #[error("uniqueness condition violated: cubic {a3} x^3 + {a1} x is not monotone")]
    NotMonotone { a3: f64, a1: f64 },
    #[error("non-finite cubic data (a3 = {a3}, a1 = {a1}, rhs = {rhs})")]
    NonFinite { a3: f64, a1: f64, rhs: f64 },
    #[error("half-step did not converge: residual {residual:e} after {iterations} iterations")]
    HalfStepNotConverged {
        best: Vec<f64>,
        residual: f64,
        iterations: usize,
    },
}

/// `a3 x³ + a1 x = rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotoneCubic {
    pub a3: f64,
    pub a1: f64,
    pub rhs: f64,
}

impl MonotoneCubic {
    pub fn new(a3: f64, a1: f64, rhs: f64) -> Self {
        MonotoneCubic { a3, a1, rhs }
    }

    pub fn residual(&self, x: f64) -> f64 {
        self.a3 * x * x * x + self.a1 * x - self.rhs
    }

    pub fn tolerance(&self) -> f64 {
        1e-12 * self.rhs.abs().max(1.0)
    }

    /// Half-width of an interval around 0 known to contain the root.
    pub fn bracket_radius(&self) -> f64 {
        let r = self.rhs.abs();
        (r / self.a1.max(self.a3)).max((r / self.a3).cbrt()) + 1.0
    }
}

pub fn solve_cubic(c: MonotoneCubic, init: f64) -> Result<f64, ScalarError> {
    let MonotoneCubic { a3, a1, rhs } = c;
    if !(a3.is_finite() && a1.is_finite() && rhs.is_finite()) {
        return Err(ScalarError::NonFinite { a3, a1, rhs });
    }
    if !(a3 > 0.0 && a1 >= 0.0) {
        return Err(ScalarError::NotMonotone { a3, a1 });
    }
    if rhs == 0.0 {
        return Ok(0.0);
    }
    let tol = c.tolerance();
    let b = c.bracket_radius();
    // the root has the sign of rhs
    let (mut lo, mut hi) = if rhs > 0.0 { (0.0, b) } else { (-b, 0.0) };
    let mut x = if init.is_finite() && init > lo && init < hi {
        init
    } else {
        0.5 * (lo + hi)
    };
    let mut best = (f64::INFINITY, x);
    for _ in 0..400 {
        let fx = c.residual(x);
        if fx.abs() < best.0 {
            best = (fx.abs(), x);
        }
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = 3.0 * a3 * x * x + a1;
        let newton = x - fx / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x {
            break;
        }
        x = next;
    }
    Ok(best.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    pub tol_residual: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol_residual: 1e-10,
            max_iters: 50,
            max_halvings: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledSolution {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// `‖F‖_∞` at the initial point and after every iteration.
    pub history: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Damped Newton on `F(x) = 0` with Jacobian `jac`.
///
/// Each iteration solves `J d = -F` by LU and backtracks on `‖F‖²`. When the
/// Newton direction is unavailable or yields no decrease, `-Jᵀ F` is tried.
pub fn solve_coupled<F, J>(
    mut f: F,
    mut jac: J,
    init: &[f64],
    cfg: &NewtonConfig,
) -> Result<CoupledSolution, ScalarError>
where
    F: FnMut(&[f64], &mut [f64]),
    J: FnMut(&[f64]) -> DMatrix<f64>,
{
    let n = init.len();
    let mut x = init.to_vec();
    let mut fx = vec![0.0; n];
    f(&x, &mut fx);
    let mut norm = inf_norm(&fx);
    let mut history = vec![norm];
    let mut trial = vec![0.0; n];
    let mut ftrial = vec![0.0; n];

    for it in 0..cfg.max_iters {
        if norm <= cfg.tol_residual {
            return Ok(CoupledSolution {
                x,
                residual: norm,
                iterations: it,
                history,
            });
        }
        let jm = jac(&x);
        let grad = jm.transpose() * DVector::from_column_slice(&fx);
        let rhs = DVector::from_iterator(n, fx.iter().map(|v| -v));
        let newton = jm
            .lu()
            .solve(&rhs)
            .filter(|d| d.iter().all(|v| v.is_finite()));
        let phi = sq_norm(&fx);
        let mut accepted = false;
        for dir in newton.into_iter().chain(std::iter::once(-grad)) {
            let mut lambda = 1.0;
            for _ in 0..=cfg.max_halvings {
                for k in 0..n {
                    trial[k] = x[k] + lambda * dir[k];
                }
                f(&trial, &mut ftrial);
                let phi_t = sq_norm(&ftrial);
                if phi_t.is_finite() && phi_t < phi {
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut fx, &mut ftrial);
        norm = inf_norm(&fx);
        history.push(norm);
    }
    if norm <= cfg.tol_residual {
        let iterations = history.len() - 1;
        return Ok(CoupledSolution {
            x,
            residual: norm,
            iterations,
            history,
        });
    }
    Err(ScalarError::HalfStepNotConverged {
        best: x,
        residual: norm,
        iterations: history.len() - 1,
    })
}

fn half_step_from(
    pi: &SparsePoly,
    tau: f64,
    u: &[f64],
    init: &[f64],
    cfg: &NewtonConfig,
) -> Result<CoupledSolution, ScalarError> {
    let n = u.len();
    solve_coupled(
        |v, out| {
            pi.gradient_into(v, out);
            for k in 0..n {
                out[k] = v[k] + tau * out[k] - u[k];
            }
        },
        |v| {
            let mut h = pi.hessian_at(v) * tau;
            for k in 0..n {
                h[(k, k)] += 1.0;
            }
            h
        },
        init,
        cfg,
    )
}

/// Solves `V + τ ∇Π(V) = u`, starting from `u`.
pub fn half_step(
    pi: &SparsePoly,
    tau: f64,
    u: &[f64],
    cfg: &NewtonConfig,
) -> Result<CoupledSolution, ScalarError> {
    half_step_from(pi, tau, u, u, cfg)
}
