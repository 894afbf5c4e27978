#![allow(dead_code)]

use boolflow::model::{BooleanProblem, PenaltyModel};
use boolflow::polynomial::{random_poly, InstanceSpec, SparsePoly};

pub fn instance(n: usize, d: u32, seed: u64) -> SparsePoly {
    random_poly(&InstanceSpec::new(n, d, seed)).unwrap()
}

pub fn model(n: usize, d: u32, seed: u64, eps: f64, c: f64) -> PenaltyModel {
    PenaltyModel::new(BooleanProblem::from_pm1(instance(n, d, seed)), eps, c).unwrap()
}

/// Central differences of `f` at `x` with step `h`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Relative error `‖a - b‖∞ / max(1, ‖b‖∞)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    inf_norm(&diff) / inf_norm(b).max(1.0)
}

/// Sign vector of index `idx`, walking from the most significant bit down.
pub fn signs_msb_first(idx: u64, n: usize) -> Vec<f64> {
    let mut s = vec![0.0; n];
    for (j, x) in s.iter_mut().enumerate() {
        *x = if idx & (1 << j) != 0 { 1.0 } else { -1.0 };
    }
    s
}

/// Exhaustive minimum walking indices downwards, single-threaded.
pub fn reversed_min(pi: &SparsePoly) -> (f64, Vec<Vec<f64>>) {
    let n = pi.nvars();
    let mut best = f64::INFINITY;
    let mut arg = Vec::new();
    for idx in (0..(1u64 << n)).rev() {
        let s = signs_msb_first(idx, n);
        let v = pi.value(&s);
        if v < best {
            best = v;
            arg = vec![s];
        } else if v == best {
            arg.push(s);
        }
    }
    (best, arg)
}
