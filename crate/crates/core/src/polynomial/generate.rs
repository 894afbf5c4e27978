//! Seeded random instances.
//!
//! The candidate pool is the set of all monomials of total degree `<= d` in
//! `n` variables, `C(n + d, d)` of them. Monomials are ranked through the
//! stars-and-bars bijection with `d`-subsets of `{0, .., n + d - 1}` (colex
//! order), so any pool index can be unranked without materializing the pool.
//! Pools larger than [`POOL_CAP`] are replaced by `POOL_CAP` distinct indices
//! drawn uniformly. Each candidate is kept with probability `sparsity` and
//! receives a nonzero integer coefficient from `[coeff_lo, coeff_hi]`.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Exponents, PolyError, SparsePoly};
use crate::rng::{rng_from_seed, Rng};

/// Largest candidate pool enumerated exhaustively.
pub const POOL_CAP: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub nvars: usize,
    pub degree: u32,
    pub coeff_lo: i64,
    pub coeff_hi: i64,
    pub sparsity: f64,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(nvars: usize, degree: u32, seed: u64) -> Self {
        InstanceSpec {
            nvars,
            degree,
            coeff_lo: -10,
            coeff_hi: 10,
            sparsity: 1.0,
            seed,
        }
    }

    pub fn with_sparsity(mut self, sparsity: f64) -> Self {
        self.sparsity = sparsity;
        self
    }

    pub fn with_coeff_range(mut self, lo: i64, hi: i64) -> Self {
        self.coeff_lo = lo;
        self.coeff_hi = hi;
        self
    }

    pub fn validate(&self) -> Result<(), PolyError> {
        let bad = |m: &str| Err(PolyError::InvalidSpec(m.to_string()));
        if self.nvars == 0 {
            return bad("nvars must be at least 1");
        }
        if self.degree == 0 {
            return bad("degree must be at least 1");
        }
        if self.coeff_lo > self.coeff_hi {
            return bad("coeff_lo exceeds coeff_hi");
        }
        if self.coeff_lo == 0 && self.coeff_hi == 0 {
            return bad("coefficient range contains no nonzero integer");
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return bad("sparsity must lie in (0, 1]");
        }
        if pool_size(self.nvars, self.degree).is_none() {
            return bad("candidate pool too large to index");
        }
        Ok(())
    }

    /// Number of candidates the generator draws from.
    pub fn candidate_count(&self) -> u64 {
        pool_size(self.nvars, self.degree)
            .map(|c| c.min(POOL_CAP))
            .unwrap_or(POOL_CAP)
    }
}

/// `C(n + d, d)`, or `None` if it does not fit comfortably in 64 bits.
pub(crate) fn pool_size(n: usize, d: u32) -> Option<u64> {
    binom_u128((n + d as usize) as u64, d as u64)
        .filter(|&c| c <= (1u128 << 62))
        .map(|c| c as u64)
}

fn binom_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.checked_mul((n - j) as u128)? / (j as u128 + 1);
    }
    Some(acc)
}

/// Unranks pool index `idx` into an exponent pattern.
fn unrank(idx: u64, n: usize, d: u32) -> Exponents {
    let d = d as u64;
    let mut rem = idx;
    let mut slots = Vec::with_capacity(d as usize);
    // colex unranking: largest c with C(c, j) <= rem, for j = d..1
    let mut upper = (n as u64) + d;
    for j in (1..=d).rev() {
        let mut c = j - 1;
        while c + 1 < upper && binom_u128(c + 1, j).unwrap() as u64 <= rem {
            c += 1;
        }
        rem -= binom_u128(c, j).unwrap() as u64;
        slots.push(c - (j - 1));
        upper = c;
    }
    // slot value 0 stands for the constant factor, s >= 1 for variable s - 1
    Exponents::from_pairs(
        slots
            .into_iter()
            .filter(|&s| s > 0)
            .map(|s| ((s - 1) as usize, 1)),
    )
}

fn draw_coefficient(rng: &mut Rng, lo: i64, hi: i64) -> f64 {
    loop {
        let c = rng.gen_range(lo..=hi);
        if c != 0 {
            return c as f64;
        }
    }
}

/// Generates the polynomial described by `spec`; identical specs give
/// identical polynomials.
pub fn random_poly(spec: &InstanceSpec) -> Result<SparsePoly, PolyError> {
    spec.validate()?;
    let n = spec.nvars;
    let d = spec.degree;
    let full = pool_size(n, d).expect("validated");
    let mut rng = rng_from_seed(spec.seed);

    let candidates: Vec<u64> = if full <= POOL_CAP {
        (0..full).collect()
    } else {
        let mut idx: Vec<u64> = index::sample(&mut rng, full as usize, POOL_CAP as usize)
            .into_iter()
            .map(|i| i as u64)
            .collect();
        idx.sort_unstable();
        idx
    };

    let mut terms = Vec::new();
    let mut has_top = false;
    for &c in &candidates {
        let keep = spec.sparsity >= 1.0 || rng.gen_bool(spec.sparsity);
        if !keep {
            continue;
        }
        let exps = unrank(c, n, d);
        has_top |= exps.degree() == d;
        terms.push((
            exps,
            draw_coefficient(&mut rng, spec.coeff_lo, spec.coeff_hi),
        ));
    }
    if !has_top {
        let exps = Exponents::from_pairs((0..d).map(|_| (rng.gen_range(0..n), 1)));
        terms.push((
            exps,
            draw_coefficient(&mut rng, spec.coeff_lo, spec.coeff_hi),
        ));
    }
    SparsePoly::from_terms(n, terms)
}
