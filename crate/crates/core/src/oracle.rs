//! Exact answers for small instances and the accuracy metrics.
//!
//! [`exhaustive_min`] walks every index `0..2^n`, coordinate `j` taking the
//! sign `2 b_j - 1` of bit `j`. The optimum is reduced as (smallest value,
//! then lexicographically smallest vector), so the result does not depend on
//! how the index range is split across threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PenaltyModel;
use crate::polynomial::SparsePoly;

pub const DEFAULT_MAX_N: usize = 24;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error(
        "exhaustive search over n = {n} variables ({size} points) exceeds the limit n <= {max}"
    )]
    TooLarge { n: usize, max: usize, size: f64 },
    #[error("entry {index} is not finite")]
    NonFinite { index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub u_star: Vec<f64>,
    pub value: f64,
    pub count: u64,
    pub size: u64,
}

/// Sign vector of enumeration index `idx`.
pub fn index_to_signs(idx: u64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| if (idx >> j) & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

#[derive(Clone)]
struct Best {
    value: f64,
    vector: Vec<f64>,
    count: u64,
}

impl Best {
    fn offer(mut self, other: Best) -> Best {
        if other.value < self.value {
            return other;
        }
        if other.value == self.value {
            self.count += other.count;
            if lex_less(&other.vector, &self.vector) {
                self.vector = other.vector;
            }
        }
        self
    }
}

pub fn exhaustive_min(pi: &SparsePoly, max_n: usize) -> Result<OracleResult, OracleError> {
    let n = pi.nvars();
    if n > max_n || n > 62 {
        return Err(OracleError::TooLarge {
            n,
            max: max_n.min(62),
            size: 2f64.powi(n as i32),
        });
    }
    let size = 1u64 << n;
    let chunks = size.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(size);
            let mut v = index_to_signs(lo, n);
            let mut best = Best {
                value: pi.value(&v),
                vector: v.clone(),
                count: 1,
            };
            for idx in lo + 1..hi {
                for (j, x) in v.iter_mut().enumerate() {
                    *x = if (idx >> j) & 1 == 1 { 1.0 } else { -1.0 };
                }
                let val = pi.value(&v);
                if val < best.value {
                    best = Best {
                        value: val,
                        vector: v.clone(),
                        count: 1,
                    };
                } else if val == best.value {
                    best.count += 1;
                    if lex_less(&v, &best.vector) {
                        best.vector.copy_from_slice(&v);
                    }
                }
            }
            best
        })
        .reduce_with(Best::offer)
        .expect("at least one chunk");
    Ok(OracleResult {
        u_star: best.vector,
        value: best.value,
        count: best.count,
        size,
    })
}

/// Nearest sign vector; `0` and `-0` round to `+1`.
pub fn round_to_signs(u: &[f64]) -> Result<Vec<f64>, OracleError> {
    if let Some(index) = u.iter().position(|x| !x.is_finite()) {
        return Err(OracleError::NonFinite { index });
    }
    Ok(signs_lenient(u))
}

/// Like [`round_to_signs`] but maps non-finite entries to `+1`.
pub fn signs_lenient(u: &[f64]) -> Vec<f64> {
    u.iter()
        .map(|&x| if x < 0.0 { -1.0 } else { 1.0 })
        .collect()
}

/// `‖u - round(u)‖₂`.
pub fn delta(u: &[f64]) -> f64 {
    u.iter()
        .zip(signs_lenient(u))
        .map(|(x, s)| (x - s) * (x - s))
        .sum::<f64>()
        .sqrt()
}

/// `|obj - opt| / (1 + |opt|)`.
pub fn relative_gap(obj: f64, opt: f64) -> f64 {
    (obj - opt).abs() / (1.0 + opt.abs())
}

/// Relative objective error of the rounding of `u` against the oracle.
pub fn errobj(pi: &SparsePoly, u: &[f64], oracle: &OracleResult) -> f64 {
    relative_gap(pi.value(&signs_lenient(u)), oracle.value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub epsilon: f64,
    pub c: f64,
    pub n: usize,
    pub r: f64,
    /// Bound on `‖∇Π‖₂` over the ball of radius `r`.
    pub g: f64,
    /// `G / √n`.
    pub l_r: f64,
    /// `4ε / (1 + 2cε) · (c√n + G)`.
    pub bound: f64,
    /// `4 (c + l_r) √n ε`.
    pub simplified: f64,
}

impl BoundCertificate {
    pub fn from_parts(epsilon: f64, c: f64, n: usize, r: f64, g: f64) -> Self {
        let sn = (n as f64).sqrt();
        let l_r = g / sn;
        BoundCertificate {
            epsilon,
            c,
            n,
            r,
            g,
            l_r,
            bound: 4.0 * epsilon / (1.0 + 2.0 * c * epsilon) * (c * sn + g),
            simplified: 4.0 * (c + l_r) * sn * epsilon,
        }
    }

    /// Whether a measured distance respects the bound.
    pub fn admits(&self, delta: f64) -> bool {
        delta <= self.bound
    }
}

pub fn bound_certificate(model: &PenaltyModel) -> BoundCertificate {
    let g = model.pi().grad_norm_bound(model.r());
    BoundCertificate::from_parts(model.epsilon(), model.c(), model.nvars(), model.r(), g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignAlignment {
    Holds,
    Fails,
    /// Some coordinate is exactly zero.
    Inconclusive,
}

/// Checks `round(u) ∘ u >= 0`; for `n <= 10` also confirms by enumeration
/// that `round(u)` is the unique nearest sign vector.
pub fn sign_alignment_check(u: &[f64]) -> SignAlignment {
    if u.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return SignAlignment::Inconclusive;
    }
    let s = signs_lenient(u);
    if u.iter().zip(&s).any(|(x, y)| x * y < 0.0) {
        return SignAlignment::Fails;
    }
    let n = u.len();
    if n <= 10 {
        let own = delta(u);
        for idx in 0..(1u64 << n) {
            let cand = index_to_signs(idx, n);
            if cand == s {
                continue;
            }
            let d = u
                .iter()
                .zip(&cand)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            if d <= own {
                return SignAlignment::Fails;
            }
        }
    }
    SignAlignment::Holds
}
