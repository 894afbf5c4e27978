//! Dormand–Prince RK5(4) with FSAL and embedded error control, and its use on
//! the first-order form of the penalty flow
//!
//! ```text
//! u' = v
//! m v' = -γ v - (1/ε)(u² - 1) u - c u - ∇Π(u)
//! ```
//!
//! A run that reaches `t_final` is `Converged` when the residual at `U(t_final)`
//! is at most `tol_residual`, and `MaxIters` otherwise.

use std::time::Instant;

use super::{check_dims, escaped, Scheme, SchemeError, SchemeParams, SolveReport, Status};
use super::{TrajPoint, Trajectory};
use crate::model::PenaltyModel;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights; equal to the last row of `A` (FSAL).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5Options {
    pub atol: f64,
    pub rtol: f64,
    pub h0: Option<f64>,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Dopri5Options {
            atol: 1e-6,
            rtol: 1e-3,
            h0: None,
            max_steps: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Dopri5Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dopri5End {
    Reached,
    MaxSteps,
    StepUnderflow,
    Halted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dopri5Result {
    pub t: f64,
    pub y: Vec<f64>,
    pub stats: Dopri5Stats,
    pub end: Dopri5End,
}

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }

    /// Fills stages 1..7 given `k[0] = f(t, y)`; the fifth-order solution is
    /// left in `ynew` and `k[6] = f(t + h, ynew)`.
    fn step<F>(&mut self, f: &mut F, t: f64, y: &[f64], h: f64, ynew: &mut [f64])
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                let row = if s == 6 { &B[..6] } else { &A[s][..s] };
                for (j, a) in row.iter().enumerate() {
                    acc += a * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            let (_, rest) = self.k.split_at_mut(s);
            f(t + C[s] * h, &self.tmp, &mut rest[0]);
        }
        // stage 7 is evaluated at the fifth-order solution
        ynew.copy_from_slice(&self.tmp);
    }

    fn error_norm(&self, y: &[f64], ynew: &[f64], h: f64, atol: f64, rtol: f64) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let e: f64 = (0..7).map(|s| E[s] * self.k[s][i]).sum::<f64>() * h;
            let sc = atol.max(rtol * y[i].abs().max(ynew[i].abs()));
            err = err.max(e.abs() / sc);
        }
        if err.is_nan() {
            f64::INFINITY
        } else {
            err
        }
    }
}

fn rms_scaled(v: &[f64], y: &[f64], atol: f64, rtol: f64) -> f64 {
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(a, b)| (a / (atol + rtol * b.abs())).powi(2))
        .sum();
    (s / v.len().max(1) as f64).sqrt()
}

fn initial_step<F>(f: &mut F, t0: f64, y0: &[f64], f0: &[f64], span: f64, o: &Dopri5Options) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let d0 = rms_scaled(y0, y0, o.atol, o.rtol);
    let d1 = rms_scaled(f0, y0, o.atol, o.rtol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + h0 * d).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(t0 + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_scaled(&diff, y0, o.atol, o.rtol) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Adaptive integration of `y' = f(t, y)` from `t0` to `t1`.
///
/// `observer(stats, t, h, y)` runs after every accepted step and may return
/// `false` to stop early.
pub fn dopri5<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &Dopri5Options,
    mut observer: O,
) -> Dopri5Result
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(&Dopri5Stats, f64, f64, &[f64]) -> bool,
{
    let n = y0.len();
    let span = t1 - t0;
    let h_min = 1e-14 * t1.abs().max(span.abs());
    let mut stats = Dopri5Stats::default();
    let mut st = Stages::new(n);
    let mut y = y0.to_vec();
    let mut ynew = vec![0.0; n];
    let mut t = t0;

    f(t, &y, &mut st.k[0]);
    stats.evals += 1;
    let mut h = match opts.h0 {
        Some(h) => h.min(span),
        None => {
            stats.evals += 1;
            let k0 = st.k[0].clone();
            initial_step(&mut f, t0, &y, &k0, span, opts)
        }
    };
    let mut last_rejected = false;

    let end = loop {
        if t >= t1 {
            break Dopri5End::Reached;
        }
        if stats.accepted >= opts.max_steps {
            break Dopri5End::MaxSteps;
        }
        if h < h_min {
            break Dopri5End::StepUnderflow;
        }
        let last = t + h >= t1 || (t1 - (t + h)) <= h_min;
        if last {
            h = t1 - t;
        }
        st.step(&mut f, t, &y, h, &mut ynew);
        stats.evals += 6;
        let err = st.error_norm(&y, &ynew, h, opts.atol, opts.rtol);
        if err <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            let (first, rest) = st.k.split_at_mut(6);
            std::mem::swap(&mut first[0], &mut rest[0]);
            if !observer(&stats, t, h, &y) {
                break Dopri5End::Halted;
            }
            let mut fac = if err == 0.0 {
                5.0
            } else {
                0.9 * err.powf(-0.2)
            };
            fac = fac.clamp(0.2, 5.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.1)
            } else {
                0.1
            };
            h *= fac;
            last_rejected = true;
        }
    };
    Dopri5Result { t, y, stats, end }
}

/// Fixed-step integration with `steps` equal steps, fifth-order solution.
pub fn dopri5_fixed<F>(mut f: F, t0: f64, y0: &[f64], t1: f64, steps: usize) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let h = (t1 - t0) / steps as f64;
    let mut st = Stages::new(n);
    let mut y = y0.to_vec();
    let mut ynew = vec![0.0; n];
    f(t0, &y, &mut st.k[0]);
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        st.step(&mut f, t, &y, h, &mut ynew);
        std::mem::swap(&mut y, &mut ynew);
        let (first, rest) = st.k.split_at_mut(6);
        std::mem::swap(&mut first[0], &mut rest[0]);
    }
    y
}

/// Right-hand side of the first-order flow; `y = [u; v]`.
pub fn flow_rhs(model: &PenaltyModel, m: f64, gamma: f64, y: &[f64], dy: &mut [f64]) {
    let n = model.nvars();
    let (u, v) = y.split_at(n);
    let (du, dv) = dy.split_at_mut(n);
    du.copy_from_slice(v);
    model.pi().gradient_into(u, dv);
    let inv_eps = 1.0 / model.epsilon();
    let c = model.c();
    for i in 0..n {
        let x = u[i];
        dv[i] = -(gamma * v[i] + inv_eps * (x * x - 1.0) * x + c * x + dv[i]) / m;
    }
}

pub fn rk45_solve(
    model: &PenaltyModel,
    params: &SchemeParams,
    u0: &[f64],
    v0: &[f64],
) -> Result<SolveReport, SchemeError> {
    params.validate()?;
    check_dims(model, u0)?;
    check_dims(model, v0)?;
    let start = Instant::now();
    let n = model.nvars();
    let radius = params.radius(model);
    let (m, gamma) = (params.m, params.gamma);
    let opts = Dopri5Options {
        atol: params.rk_atol,
        rtol: params.rk_rtol,
        h0: None,
        max_steps: params.max_iters,
    };
    let y0: Vec<f64> = u0.iter().chain(v0).copied().collect();

    let mut traj = params.keep_trajectory.then(Trajectory::default);
    if let Some(t) = traj.as_mut() {
        t.push(TrajPoint {
            k: 0,
            t: 0.0,
            tau: 0.0,
            residual: model.residual_norm(u0),
            u: u0.to_vec(),
            v: Some(v0.to_vec()),
        });
    }
    let mut last_good = u0.to_vec();
    let mut last_h = 0.0;
    let out = dopri5(
        |_, y, dy| flow_rhs(model, m, gamma, y, dy),
        0.0,
        &y0,
        params.t_final,
        &opts,
        |stats, t, h, y| {
            let (u, v) = y.split_at(n);
            if escaped(u, radius) {
                return false;
            }
            last_good.copy_from_slice(u);
            last_h = h;
            if let Some(tr) = traj.as_mut() {
                tr.push(TrajPoint {
                    k: stats.accepted,
                    t,
                    tau: h,
                    residual: model.residual_norm(u),
                    u: u.to_vec(),
                    v: Some(v.to_vec()),
                });
            }
            true
        },
    );
    let status = match out.end {
        Dopri5End::Reached if model.residual_norm(&last_good) <= params.tol_residual => {
            Status::Converged
        }
        Dopri5End::Reached => Status::MaxIters,
        Dopri5End::MaxSteps => Status::MaxIters,
        Dopri5End::StepUnderflow | Dopri5End::Halted => Status::Diverged,
    };
    let accepted = match out.end {
        Dopri5End::Halted => out.stats.accepted - 1,
        _ => out.stats.accepted,
    };
    let mut r = SolveReport::build(Scheme::Rk45, status, model, last_good, accepted, last_h);
    r.rejected = out.stats.rejected;
    if out.end == Dopri5End::StepUnderflow {
        r.message = Some(format!("step size underflow at t = {:e}", out.t));
    }
    r.trajectory = traj;
    r.wall_time = start.elapsed().as_secs_f64();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BooleanProblem;
    use crate::polynomial::SparsePoly;

    fn decay(_: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = -y[0];
    }

    #[test]
    fn tableau_rows_are_consistent() {
        for s in 1..7 {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-14, "row {s}");
        }
        assert_eq!(&A[6][..], &B[..6]);
        assert!((B.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(E.iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn exponential_decay() {
        let opts = Dopri5Options {
            atol: 1e-10,
            rtol: 1e-10,
            ..Dopri5Options::default()
        };
        let r = dopri5(decay, 0.0, &[1.0], 1.0, &opts, |_, _, _, _| true);
        assert_eq!(r.end, Dopri5End::Reached);
        assert_eq!(r.t, 1.0);
        assert!((r.y[0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn fixed_step_is_fifth_order() {
        let exact = (-1.0f64).exp();
        let e1 = (dopri5_fixed(decay, 0.0, &[1.0], 1.0, 4)[0] - exact).abs();
        let e2 = (dopri5_fixed(decay, 0.0, &[1.0], 1.0, 8)[0] - exact).abs();
        let order = (e1 / e2).log2();
        assert!((order - 5.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn stationary_sign_vectors() {
        let model =
            PenaltyModel::new(BooleanProblem::from_pm1(SparsePoly::zero(2)), 1e-4, 0.0).unwrap();
        let mut dy = [1.0; 4];
        flow_rhs(&model, 1.0, 50.0, &[1.0, -1.0, 0.0, 0.0], &mut dy);
        assert_eq!(dy, [0.0; 4]);
        let r = rk45_solve(&model, &SchemeParams::default(), &[-1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.u, vec![-1.0, 1.0]);
    }
}
