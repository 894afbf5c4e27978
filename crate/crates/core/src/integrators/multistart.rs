//! Independent solves from random starts with deterministic selection.

use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use super::{solve, Scheme, SchemeParams, SolveReport};
use crate::model::PenaltyModel;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Clone, Debug, PartialEq)]
pub struct MultistartResult {
    pub best: usize,
    pub reports: Vec<SolveReport>,
}

impl MultistartResult {
    pub fn best_report(&self) -> &SolveReport {
        &self.reports[self.best]
    }

    /// Mean iteration count over all starts.
    pub fn mean_iterations(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.iterations as f64)
            .sum::<f64>()
            / self.reports.len() as f64
    }
}

#[derive(Debug, Error)]
#[error("all {} starts failed", reports.len())]
pub struct MultistartError {
    pub reports: Vec<SolveReport>,
}

/// Start `index`: uniform in `[-1, 1]^n` from its own derived stream.
pub fn random_start(seed: u64, index: usize, n: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(derive_seed(seed, &[index as u64]));
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Runs `n_starts` solves in parallel and picks the usable report with the
/// smallest `J_ε`, breaking ties by start index.
pub fn multistart(
    scheme: Scheme,
    model: &PenaltyModel,
    params: &SchemeParams,
    n_starts: usize,
    seed: u64,
) -> Result<MultistartResult, MultistartError> {
    assert!(n_starts >= 1, "n_starts must be at least 1");
    let n = model.nvars();
    let zero = vec![0.0; n];
    let reports: Vec<SolveReport> = (0..n_starts)
        .into_par_iter()
        .map(|i| {
            let u0 = random_start(seed, i, n);
            solve(scheme, model, params, &u0, &zero)
                .unwrap_or_else(|e| SolveReport::failed(scheme, model, &u0, &e))
        })
        .collect();
    let best = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_usable())
        .min_by(|(i, a), (j, b)| a.penalty.total_cmp(&b.penalty).then(i.cmp(j)))
        .map(|(i, _)| i);
    match best {
        Some(best) => Ok(MultistartResult { best, reports }),
        None => Err(MultistartError { reports }),
    }
}
