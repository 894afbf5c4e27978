//! Sparse multivariate polynomials over `f64`.
//!
//! A [`SparsePoly`] is a list of [`Monomial`]s kept in canonical form: terms
//! are sorted by graded order on their exponent patterns, no pattern appears
//! twice and no stored coefficient is zero. Exponent patterns are stored as
//! sparse `(variable, power)` pairs with strictly increasing variable index.
//!
//! Besides arithmetic and symbolic differentiation the module provides the
//! numeric kernels used by the solvers (`value`, `gradient_into`,
//! `hessian_at`), which work directly on the term list without building the
//! derivative polynomials.

mod generate;
mod io;

pub use generate::{random_poly, InstanceSpec};
pub use io::{Domain, InstanceFile, PenaltyBlock, TermRecord, INSTANCE_FORMAT};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error(
        "dimension mismatch: polynomial has {expected} variables, got a vector of length {got}"
    )]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable index {var} out of range for {nvars} variables")]
    VarOutOfRange { var: usize, nvars: usize },
    #[error("non-finite coefficient {0}")]
    NonFiniteCoefficient(f64),
    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),
    #[error("unsupported instance format {0}")]
    UnsupportedFormat(u32),
    #[error("instance file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Exponent pattern of a monomial: `(variable, power)` pairs, strictly
/// increasing in variable, every power positive. The empty pattern is the
/// constant monomial.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Exponents(Vec<(u32, u32)>);

impl Exponents {
    pub fn one() -> Self {
        Exponents(Vec::new())
    }

    pub fn var(index: usize, power: u32) -> Self {
        if power == 0 {
            Self::one()
        } else {
            Exponents(vec![(index as u32, power)])
        }
    }

    /// Build from arbitrary pairs; repeated variables are merged and zero
    /// powers dropped.
    pub fn from_pairs<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Self {
        let mut acc: BTreeMap<u32, u32> = BTreeMap::new();
        for (v, p) in pairs {
            *acc.entry(v as u32).or_insert(0) += p;
        }
        Exponents(acc.into_iter().filter(|&(_, p)| p > 0).collect())
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, p)| p).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_empty()
    }

    pub fn power_of(&self, var: usize) -> u32 {
        self.0
            .binary_search_by_key(&(var as u32), |&(v, _)| v)
            .map(|k| self.0[k].1)
            .unwrap_or(0)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.0.last().map(|&(v, _)| v as usize)
    }

    /// Value of the bare monomial at `v`.
    pub fn eval(&self, v: &[f64]) -> f64 {
        self.0
            .iter()
            .fold(1.0, |acc, &(i, p)| acc * v[i as usize].powi(p as i32))
    }

    pub fn mul(&self, other: &Exponents) -> Exponents {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Exponents(out)
    }

    /// Exponent pattern of d/dv_var together with the power-rule factor.
    fn differentiate(&self, var: usize) -> Option<(Exponents, u32)> {
        let k = self
            .0
            .binary_search_by_key(&(var as u32), |&(v, _)| v)
            .ok()?;
        let p = self.0[k].1;
        let mut out = self.0.clone();
        if p == 1 {
            out.remove(k);
        } else {
            out[k].1 = p - 1;
        }
        Some((Exponents(out), p))
    }
}

impl Ord for Exponents {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponents {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Exponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, &(v, p)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if p == 1 {
                write!(f, "v{v}")?;
            } else {
                write!(f, "v{v}^{p}")?;
            }
        }
        Ok(())
    }
}

/// A coefficient attached to an exponent pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub exps: Exponents,
    pub coef: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsePoly {
    nvars: usize,
    terms: Vec<Monomial>,
    /// Largest exponent of any single variable.
    max_power: u32,
}

impl SparsePoly {
    pub fn zero(nvars: usize) -> Self {
        SparsePoly {
            nvars,
            terms: Vec::new(),
            max_power: 0,
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_map(nvars, [(Exponents::one(), c)])
    }

    /// The polynomial `v_index`.
    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars, "variable {index} out of range");
        Self::from_map(nvars, [(Exponents::var(index, 1), 1.0)])
    }

    /// Canonicalizing constructor: merges repeated patterns, drops zeros and
    /// validates variable indices and coefficients.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Exponents, f64)>,
    {
        let mut acc: BTreeMap<Exponents, f64> = BTreeMap::new();
        for (e, c) in terms {
            if !c.is_finite() {
                return Err(PolyError::NonFiniteCoefficient(c));
            }
            if let Some(v) = e.max_var() {
                if v >= nvars {
                    return Err(PolyError::VarOutOfRange { var: v, nvars });
                }
            }
            *acc.entry(e).or_insert(0.0) += c;
        }
        Ok(Self::from_btree(nvars, acc))
    }

    fn from_map<I: IntoIterator<Item = (Exponents, f64)>>(nvars: usize, terms: I) -> Self {
        let mut acc: BTreeMap<Exponents, f64> = BTreeMap::new();
        for (e, c) in terms {
            *acc.entry(e).or_insert(0.0) += c;
        }
        Self::from_btree(nvars, acc)
    }

    fn from_btree(nvars: usize, acc: BTreeMap<Exponents, f64>) -> Self {
        let terms: Vec<Monomial> = acc
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|(exps, coef)| Monomial { exps, coef })
            .collect();
        let max_power = terms
            .iter()
            .flat_map(|t| t.exps.pairs().iter().map(|&(_, p)| p))
            .max()
            .unwrap_or(0);
        SparsePoly {
            nvars,
            terms,
            max_power,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exps.degree())
            .max()
            .unwrap_or(0)
    }

    /// Coefficient of an exponent pattern (0 when absent).
    pub fn coefficient(&self, exps: &Exponents) -> f64 {
        self.terms
            .binary_search_by(|t| t.exps.cmp(exps))
            .map(|k| self.terms[k].coef)
            .unwrap_or(0.0)
    }

    fn check_len(&self, v: &[f64]) -> Result<(), PolyError> {
        if v.len() != self.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Checked evaluation.
    pub fn eval(&self, v: &[f64]) -> Result<f64, PolyError> {
        self.check_len(v)?;
        Ok(self.value(v))
    }

    /// Evaluation without the length check; `v.len()` must equal `nvars`.
    pub fn value(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.nvars);
        self.terms.iter().map(|t| t.coef * t.exps.eval(v)).sum()
    }

    /// Checked gradient evaluation.
    pub fn eval_gradient(&self, v: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.check_len(v)?;
        let mut g = vec![0.0; self.nvars];
        self.gradient_into(v, &mut g);
        Ok(g)
    }

    /// Writes the gradient at `v` into `out` (overwriting it).
    ///
    /// Each term contributes through prefix/suffix products of its factors,
    /// so zero coordinates need no special casing.
    pub fn gradient_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.nvars);
        debug_assert_eq!(out.len(), self.nvars);
        out.iter_mut().for_each(|g| *g = 0.0);
        let stride = self.max_power as usize + 1;
        let mut pow = vec![1.0; self.nvars * stride];
        for (i, &x) in v.iter().enumerate() {
            for p in 1..stride {
                pow[i * stride + p] = pow[i * stride + p - 1] * x;
            }
        }
        let mut suffix: Vec<f64> = Vec::new();
        for t in &self.terms {
            let pairs = t.exps.pairs();
            let k = pairs.len();
            if k == 0 {
                continue;
            }
            suffix.clear();
            suffix.resize(k + 1, 1.0);
            for j in (0..k).rev() {
                let (i, p) = pairs[j];
                suffix[j] = suffix[j + 1] * pow[i as usize * stride + p as usize];
            }
            let mut prefix = t.coef;
            for (j, &(i, p)) in pairs.iter().enumerate() {
                let base = i as usize * stride;
                let d = p as f64 * pow[base + p as usize - 1];
                out[i as usize] += prefix * d * suffix[j + 1];
                prefix *= pow[base + p as usize];
            }
        }
    }

    /// Dense Hessian at `v`.
    pub fn hessian_at(&self, v: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(v.len(), self.nvars);
        let n = self.nvars;
        let mut h = DMatrix::zeros(n, n);
        let stride = self.max_power as usize + 1;
        let mut pow = vec![1.0; n * stride];
        for (i, &x) in v.iter().enumerate() {
            for p in 1..stride {
                pow[i * stride + p] = pow[i * stride + p - 1] * x;
            }
        }
        let mut f = Vec::new();
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        for t in &self.terms {
            let pairs = t.exps.pairs();
            let k = pairs.len();
            if k == 0 || t.exps.degree() < 2 {
                continue;
            }
            f.clear();
            d1.clear();
            d2.clear();
            for &(i, p) in pairs {
                let base = i as usize * stride;
                let p = p as usize;
                f.push(pow[base + p]);
                d1.push(p as f64 * pow[base + p - 1]);
                d2.push(if p >= 2 {
                    (p * (p - 1)) as f64 * pow[base + p - 2]
                } else {
                    0.0
                });
            }
            for a in 0..k {
                let ia = pairs[a].0 as usize;
                let rest: f64 = (0..k).filter(|&c| c != a).map(|c| f[c]).product();
                h[(ia, ia)] += t.coef * d2[a] * rest;
                for b in (a + 1)..k {
                    let ib = pairs[b].0 as usize;
                    let rest: f64 = (0..k).filter(|&c| c != a && c != b).map(|c| f[c]).product();
                    let val = t.coef * d1[a] * d1[b] * rest;
                    h[(ia, ib)] += val;
                    h[(ib, ia)] += val;
                }
            }
        }
        h
    }

    /// Partial derivative with respect to `var` as a canonical polynomial.
    pub fn derivative(&self, var: usize) -> SparsePoly {
        Self::from_map(
            self.nvars,
            self.terms.iter().filter_map(|t| {
                t.exps
                    .differentiate(var)
                    .map(|(e, p)| (e, t.coef * p as f64))
            }),
        )
    }

    pub fn grad(&self) -> Vec<SparsePoly> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    /// Symbolic Hessian; entry `[i][j]` is d²p/dv_i dv_j.
    pub fn hessian(&self) -> Vec<Vec<SparsePoly>> {
        let n = self.nvars;
        let g = self.grad();
        let mut h = vec![vec![SparsePoly::zero(n); n]; n];
        for i in 0..n {
            for j in i..n {
                let e = g[i].derivative(j);
                h[j][i] = e.clone();
                h[i][j] = e;
            }
        }
        h
    }

    /// Returns `q` with `q(v) = p(scale * v + shift * 1)`, fully expanded.
    pub fn compose_affine(&self, scale: f64, shift: f64) -> SparsePoly {
        let mut acc: BTreeMap<Exponents, f64> = BTreeMap::new();
        for t in &self.terms {
            // expand prod_i (scale v_i + shift)^{p_i} one variable at a time
            let mut partial: Vec<(Vec<(u32, u32)>, f64)> = vec![(Vec::new(), t.coef)];
            for &(i, p) in t.exps.pairs() {
                let mut next = Vec::with_capacity(partial.len() * (p as usize + 1));
                for (pat, c) in &partial {
                    for k in 0..=p {
                        let w = binomial(p, k) * scale.powi(k as i32) * shift.powi((p - k) as i32);
                        if w == 0.0 {
                            continue;
                        }
                        let mut pat = pat.clone();
                        if k > 0 {
                            pat.push((i, k));
                        }
                        next.push((pat, c * w));
                    }
                }
                partial = next;
            }
            for (pat, c) in partial {
                *acc.entry(Exponents(pat)).or_insert(0.0) += c;
            }
        }
        Self::from_btree(self.nvars, acc)
    }

    /// Upper bound on `max ||grad p(v)||_2` over the ball `||v||_2 <= r`,
    /// using `|v_j| <= r` on every factor.
    pub fn grad_norm_bound(&self, r: f64) -> f64 {
        let mut per_coord = vec![0.0; self.nvars];
        for t in &self.terms {
            let deg = t.exps.degree() as i32;
            for &(i, p) in t.exps.pairs() {
                per_coord[i as usize] += t.coef.abs() * p as f64 * r.powi(deg - 1);
            }
        }
        per_coord.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    /// Upper bound on `max ||hess p(v)||_inf` over the ball of radius `r`:
    /// each Hessian entry is bounded by the sum of `|coef| r^deg` over its
    /// canonical terms, then the largest absolute row sum is taken.
    pub fn hessian_infnorm_bound(&self, r: f64) -> f64 {
        let h = self.hessian();
        h.iter()
            .map(|row| row.iter().map(|e| e.abs_coefficient_bound(r)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `sum |coef| r^deg` over the terms; bounds `|p(v)|` when every `|v_j| <= r`.
    pub fn abs_coefficient_bound(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef.abs() * r.powi(t.exps.degree() as i32))
            .sum()
    }

    pub fn scale(&self, a: f64) -> SparsePoly {
        Self::from_map(
            self.nvars,
            self.terms.iter().map(|t| (t.exps.clone(), a * t.coef)),
        )
    }

    fn assert_same_vars(&self, other: &SparsePoly) {
        assert_eq!(
            self.nvars, other.nvars,
            "polynomials over different variable counts"
        );
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

impl Add for &SparsePoly {
    type Output = SparsePoly;
    fn add(self, rhs: &SparsePoly) -> SparsePoly {
        self.assert_same_vars(rhs);
        SparsePoly::from_map(
            self.nvars,
            self.terms
                .iter()
                .chain(rhs.terms.iter())
                .map(|t| (t.exps.clone(), t.coef)),
        )
    }
}

impl Sub for &SparsePoly {
    type Output = SparsePoly;
    fn sub(self, rhs: &SparsePoly) -> SparsePoly {
        self + &(-rhs)
    }
}

impl Neg for &SparsePoly {
    type Output = SparsePoly;
    fn neg(self) -> SparsePoly {
        self.scale(-1.0)
    }
}

impl Mul for &SparsePoly {
    type Output = SparsePoly;
    fn mul(self, rhs: &SparsePoly) -> SparsePoly {
        self.assert_same_vars(rhs);
        let mut acc: BTreeMap<Exponents, f64> = BTreeMap::new();
        for a in &self.terms {
            for b in &rhs.terms {
                *acc.entry(a.exps.mul(&b.exps)).or_insert(0.0) += a.coef * b.coef;
            }
        }
        SparsePoly::from_btree(self.nvars, acc)
    }
}

impl Mul<f64> for &SparsePoly {
    type Output = SparsePoly;
    fn mul(self, rhs: f64) -> SparsePoly {
        self.scale(rhs)
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if t.exps.is_constant() {
                write!(f, "{}", t.coef)?;
            } else {
                write!(f, "{}*{}", t.coef, t.exps)?;
            }
        }
        Ok(())
    }
}
