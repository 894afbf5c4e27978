//! Boolean problems and the quartic penalty functional.
//!
//! A [`BooleanProblem`] holds the same objective twice: `P` over `{0,1}^n` and
//! `Π(V) = P((1 + V) / 2)` over `{-1,1}^n`. A [`PenaltyModel`] adds the
//! penalty parameters and evaluates
//!
//! ```text
//! J(V) = (1/4ε) Σ (v_i² - 1)² + (c/2) ‖V‖² + Π(V)
//! ∇J(V) = (1/ε) (v_i² - 1) v_i + c v_i + ∂Π/∂v_i
//! ```

use thiserror::Error;

use crate::polynomial::{PenaltyBlock, SparsePoly};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("entry {index} is {value}, expected -1 or 1")]
    NotSignVector { index: usize, value: f64 },
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("c must be finite and non-negative, got {0}")]
    Regularization(f64),
    #[error("ball radius {r} must exceed sqrt(n) = {min}")]
    Radius { r: f64, min: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BooleanProblem {
    binary: SparsePoly,
    pm1: SparsePoly,
}

impl BooleanProblem {
    /// From `P` over `{0,1}` variables.
    pub fn from_binary(p: SparsePoly) -> Self {
        let pm1 = p.compose_affine(0.5, 0.5);
        BooleanProblem { binary: p, pm1 }
    }

    /// From `Π` over `{-1,1}` variables.
    pub fn from_pm1(pi: SparsePoly) -> Self {
        let binary = pi.compose_affine(2.0, -1.0);
        BooleanProblem { binary, pm1: pi }
    }

    pub fn binary(&self) -> &SparsePoly {
        &self.binary
    }

    pub fn pm1(&self) -> &SparsePoly {
        &self.pm1
    }

    pub fn nvars(&self) -> usize {
        self.pm1.nvars()
    }

    pub fn degree(&self) -> u32 {
        self.pm1.degree()
    }
}

pub fn to_pm1(p: SparsePoly) -> BooleanProblem {
    BooleanProblem::from_binary(p)
}

/// `x_i = (1 + u_i) / 2` for a sign vector `u`.
pub fn recover_x(u: &[f64]) -> Result<Vec<f64>, ModelError> {
    u.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value == 1.0 || value == -1.0 {
                Ok((1.0 + value) / 2.0)
            } else {
                Err(ModelError::NotSignVector { index, value })
            }
        })
        .collect()
}

pub fn default_radius(n: usize) -> f64 {
    1.5 * (n as f64).sqrt()
}

#[derive(Clone, Debug)]
pub struct PenaltyModel {
    problem: BooleanProblem,
    epsilon: f64,
    c: f64,
    r: f64,
}

impl PenaltyModel {
    /// Uses the default ball radius `1.5 √n`.
    pub fn new(problem: BooleanProblem, epsilon: f64, c: f64) -> Result<Self, ModelError> {
        let r = default_radius(problem.nvars());
        Self::with_radius(problem, epsilon, c, r)
    }

    pub fn with_radius(
        problem: BooleanProblem,
        epsilon: f64,
        c: f64,
        r: f64,
    ) -> Result<Self, ModelError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(ModelError::Epsilon(epsilon));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(ModelError::Regularization(c));
        }
        let min = (problem.nvars() as f64).sqrt();
        if !(r > min) {
            return Err(ModelError::Radius { r, min });
        }
        Ok(PenaltyModel {
            problem,
            epsilon,
            c,
            r,
        })
    }

    pub fn problem(&self) -> &BooleanProblem {
        &self.problem
    }

    pub fn pi(&self) -> &SparsePoly {
        self.problem.pm1()
    }

    pub fn nvars(&self) -> usize {
        self.problem.nvars()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn penalty_block(&self) -> PenaltyBlock {
        PenaltyBlock {
            epsilon: self.epsilon,
            c: self.c,
            r: self.r,
        }
    }

    pub fn penalty_value(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.nvars(), "state length");
        let quartic: f64 = v.iter().map(|x| (x * x - 1.0).powi(2)).sum();
        let sq: f64 = v.iter().map(|x| x * x).sum();
        quartic / (4.0 * self.epsilon) + 0.5 * self.c * sq + self.pi().value(v)
    }

    pub fn penalty_gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; v.len()];
        self.gradient_into(v, &mut g);
        g
    }

    pub fn gradient_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.nvars(), "state length");
        self.pi().gradient_into(v, out);
        let inv_eps = 1.0 / self.epsilon;
        for (g, &x) in out.iter_mut().zip(v) {
            *g += inv_eps * (x * x - 1.0) * x + self.c * x;
        }
    }

    /// `‖∇J(V)‖_∞`.
    pub fn residual_norm(&self, v: &[f64]) -> f64 {
        self.penalty_gradient(v)
            .iter()
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Smallest `c` for which the ∞-norm bound makes `(c/2)‖V‖² + Π(V)` convex
/// on the ball of radius `r`.
pub fn suggest_c(problem: &BooleanProblem, r: f64) -> f64 {
    problem.pm1().hessian_infnorm_bound(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::Exponents;

    fn poly(n: usize, terms: &[(&[(usize, u32)], f64)]) -> SparsePoly {
        SparsePoly::from_terms(
            n,
            terms
                .iter()
                .map(|(e, c)| (Exponents::from_pairs(e.iter().copied()), *c)),
        )
        .unwrap()
    }

    #[test]
    fn transform_examples() {
        let b = to_pm1(poly(1, &[(&[(0, 1)], 1.0)]));
        assert_eq!(b.pm1(), &poly(1, &[(&[], 0.5), (&[(0, 1)], 0.5)]));

        let b = to_pm1(poly(2, &[(&[(0, 1), (1, 1)], 1.0)]));
        assert_eq!(b.pm1().eval(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(b.pm1().eval(&[-1.0, -1.0]).unwrap(), 0.0);
    }

    #[test]
    fn from_pm1_inverts_from_binary() {
        let p = poly(
            2,
            &[(&[(0, 2), (1, 1)], 3.0), (&[(1, 1)], -2.0), (&[], 1.0)],
        );
        let b = BooleanProblem::from_binary(p.clone());
        let back = BooleanProblem::from_pm1(b.pm1().clone());
        for y in [[0.0, 0.0], [0.3, 1.0], [1.0, -2.0]] {
            let a = p.eval(&y).unwrap();
            let z = back.binary().eval(&y).unwrap();
            assert!((a - z).abs() < 1e-12);
        }
    }

    #[test]
    fn recover_x_examples() {
        assert_eq!(recover_x(&[1.0, -1.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(recover_x(&[-1.0; 3]).unwrap(), vec![0.0; 3]);
        assert_eq!(
            recover_x(&[1.0, 0.5]),
            Err(ModelError::NotSignVector {
                index: 1,
                value: 0.5
            })
        );
    }

    #[test]
    fn penalty_value_examples() {
        let pi = poly(3, &[(&[(0, 1), (2, 1)], 2.0), (&[], -1.5)]);
        let m = PenaltyModel::new(BooleanProblem::from_pm1(pi.clone()), 1e-3, 7.0).unwrap();
        let s = [1.0, -1.0, -1.0];
        assert!((m.penalty_value(&s) - (7.0 * 3.0 / 2.0 + pi.value(&s))).abs() < 1e-12);
        let z = [0.0; 3];
        assert!((m.penalty_value(&z) - (3.0 / 4e-3 - 1.5)).abs() < 1e-9);
    }

    #[test]
    fn sign_vectors_are_equilibria_without_objective() {
        let m =
            PenaltyModel::new(BooleanProblem::from_pm1(SparsePoly::zero(3)), 1e-4, 0.0).unwrap();
        for s in [[1.0, -1.0, 1.0], [-1.0; 3], [0.0; 3]] {
            assert!(m.penalty_gradient(&s).iter().all(|&g| g == 0.0));
            assert_eq!(m.residual_norm(&s), 0.0);
        }
        let m =
            PenaltyModel::new(BooleanProblem::from_pm1(SparsePoly::zero(2)), 1e-4, 3.0).unwrap();
        assert_eq!(m.residual_norm(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn suggest_c_examples() {
        let b = BooleanProblem::from_pm1(poly(2, &[(&[(0, 1), (1, 1)], 1.0)]));
        assert_eq!(suggest_c(&b, 3.0), 1.0);
        let b = BooleanProblem::from_pm1(poly(2, &[(&[(0, 1)], 4.0), (&[(1, 1)], -1.0)]));
        assert_eq!(suggest_c(&b, 3.0), 0.0);
    }

    #[test]
    fn parameters_validated() {
        let b = BooleanProblem::from_pm1(SparsePoly::zero(4));
        assert!(matches!(
            PenaltyModel::new(b.clone(), 0.0, 1.0),
            Err(ModelError::Epsilon(_))
        ));
        assert!(matches!(
            PenaltyModel::new(b.clone(), 1e-4, -1.0),
            Err(ModelError::Regularization(_))
        ));
        assert!(matches!(
            PenaltyModel::with_radius(b.clone(), 1e-4, 1.0, 2.0),
            Err(ModelError::Radius { .. })
        ));
        assert_eq!(PenaltyModel::new(b, 1e-4, 1.0).unwrap().r(), 3.0);
    }
}
