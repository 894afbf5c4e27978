use std::path::Path;

use rayon::prelude::*;

use super::{ExperimentConfig, HarnessError, RunRecord, StartMode};
use crate::integrators::{multistart, solve, Scheme, SolveReport, Status};
use crate::model::{BooleanProblem, PenaltyModel};
use crate::oracle::{bound_certificate, errobj, exhaustive_min, OracleResult};
use crate::polynomial::{random_poly, Domain, InstanceFile, InstanceSpec, SparsePoly};
use crate::rng::derive_seed;

/// A problem instance together with its serialized form.
#[derive(Clone, Debug)]
pub struct Instance {
    pub file: InstanceFile,
    pub hash: String,
    pub problem: BooleanProblem,
}

impl Instance {
    pub fn from_file(file: InstanceFile) -> Result<Self, HarnessError> {
        let poly = file.to_poly()?;
        let problem = match file.domain() {
            Domain::Pm1 => BooleanProblem::from_pm1(poly),
            Domain::Binary => BooleanProblem::from_binary(poly),
        };
        Ok(Instance {
            hash: file.content_hash(),
            file,
            problem,
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_file(InstanceFile::read(path)?)
    }

    pub fn nvars(&self) -> usize {
        self.problem.nvars()
    }

    pub fn spec(&self) -> Option<&InstanceSpec> {
        self.file.spec.as_ref()
    }
}

pub fn build_instance(spec: InstanceSpec, domain: Domain) -> Result<Instance, HarnessError> {
    let poly = random_poly(&spec)?;
    Instance::from_file(
        InstanceFile::from_poly(&poly)
            .with_domain(domain)
            .with_spec(spec),
    )
}

struct Cell {
    instance: Instance,
    oracle: Option<OracleResult>,
    start_seed: u64,
}

fn prepare_cell(
    cfg: &ExperimentConfig,
    instance: Instance,
    start_seed: u64,
) -> Result<Cell, HarnessError> {
    let pi: &SparsePoly = instance.problem.pm1();
    let oracle = if instance.nvars() <= cfg.oracle_max_n {
        Some(exhaustive_min(pi, cfg.oracle_max_n)?)
    } else {
        None
    };
    Ok(Cell {
        instance,
        oracle,
        start_seed,
    })
}

fn run_task(
    cfg: &ExperimentConfig,
    cell: &Cell,
    eps: f64,
    scheme: Scheme,
) -> Result<RunRecord, HarnessError> {
    let inst = &cell.instance;
    let n = inst.nvars();
    let model = PenaltyModel::new(inst.problem.clone(), eps, cfg.c)?;
    let params = cfg.params_for(scheme);

    let reports: Vec<SolveReport>;
    let best: usize;
    match cfg.start {
        StartMode::Zero => {
            let z = vec![0.0; n];
            let r = solve(scheme, &model, &params, &z, &z)
                .unwrap_or_else(|e| SolveReport::failed(scheme, &model, &z, &e));
            reports = vec![r];
            best = 0;
        }
        StartMode::Random => {
            match multistart(scheme, &model, &params, cfg.n_starts, cell.start_seed) {
                Ok(ms) => {
                    best = ms.best;
                    reports = ms.reports;
                }
                Err(e) => {
                    best = 0;
                    reports = e.reports;
                }
            }
        }
    }

    let chosen = &reports[best];
    let cert = bound_certificate(&model);
    let count = reports.len();
    let diverged_starts = reports
        .iter()
        .filter(|r| r.status == Status::Diverged)
        .count();
    let avg_iterations = reports.iter().map(|r| r.iterations as f64).sum::<f64>() / count as f64;
    let total_time: f64 = reports.iter().map(|r| r.wall_time).sum();
    let timing = |x: f64| cfg.record_timing.then_some(x);

    Ok(RunRecord {
        n,
        d: inst.problem.degree(),
        instance_seed: inst.spec().map(|s| s.seed),
        instance_hash: inst.hash.clone(),
        sparsity: inst.spec().map(|s| s.sparsity),
        nterms: inst.problem.pm1().len(),
        scheme,
        epsilon: eps,
        c: cfg.c,
        r: model.r(),
        m: params.m,
        gamma: params.gamma,
        tau_mode: params.tau_mode,
        n_starts: count,
        best_start: best,
        status: chosen.status,
        iterations: chosen.iterations,
        avg_iterations,
        rejected: chosen.rejected,
        delta: chosen.delta,
        objective: chosen.objective,
        penalty: chosen.penalty,
        residual: chosen.residual,
        tau_final: chosen.tau_final,
        tau_clamped: chosen.tau_clamped,
        time: timing(chosen.wall_time),
        total_time: timing(total_time),
        u: chosen.u.clone(),
        rounded: chosen.rounded.clone(),
        oracle_value: cell.oracle.as_ref().map(|o| o.value),
        oracle_u: cell.oracle.as_ref().map(|o| o.u_star.clone()),
        errobj: cell
            .oracle
            .as_ref()
            .map(|o| errobj(model.pi(), &chosen.u, o)),
        bound: cert.bound,
        simplified_bound: cert.simplified,
        diverged_starts,
        message: chosen.message.clone(),
        sweep: None,
        trajectory: chosen.trajectory.clone(),
    })
}

/// Runs every `(cell, ε, scheme)` combination of `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, HarnessError> {
    cfg.validate()?;
    in_pool(cfg, || {
        let cells: Vec<Cell> = cfg
            .grid
            .par_iter()
            .map(|&[n, d]| {
                let inst = build_instance(cfg.instance_spec(n, d), cfg.instance.domain)?;
                prepare_cell(cfg, inst, cfg.start_seed(n, d))
            })
            .collect::<Result<_, _>>()?;
        run_cells(cfg, &cells)
    })
}

/// Runs every `(ε, scheme)` combination of `cfg` on a given instance; the
/// grid of `cfg` is ignored.
pub fn run_on_instance(
    cfg: &ExperimentConfig,
    instance: Instance,
) -> Result<Vec<RunRecord>, HarnessError> {
    cfg.validate()?;
    let seed = derive_seed(cfg.seed, &[0x57a7]);
    in_pool(cfg, || {
        let cell = prepare_cell(cfg, instance, seed)?;
        run_cells(cfg, std::slice::from_ref(&cell))
    })
}

fn in_pool<T: Send>(
    cfg: &ExperimentConfig,
    f: impl FnOnce() -> Result<T, HarnessError> + Send,
) -> Result<T, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?
        .install(f)
}

fn run_cells(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<Vec<RunRecord>, HarnessError> {
    let tasks: Vec<(usize, f64, Scheme)> = (0..cells.len())
        .flat_map(|c| {
            cfg.epsilons
                .iter()
                .flat_map(move |&e| cfg.schemes.iter().map(move |&s| (c, e, s)))
        })
        .collect();
    let records: Vec<RunRecord> = tasks
        .par_iter()
        .map(|&(c, e, s)| run_task(cfg, &cells[c], e, s))
        .collect::<Result<_, _>>()?;
    for r in &records {
        if r.status != Status::Converged {
            log::warn!(
                "{} on n={} d={} eps={:e}: {}{}",
                r.scheme,
                r.n,
                r.d,
                r.epsilon,
                r.status,
                r.message
                    .as_deref()
                    .map(|m| format!(" ({m})"))
                    .unwrap_or_default()
            );
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            grid: vec![[2, 4], [4, 3]],
            epsilons: vec![1e-3],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn records_follow_grid_order() {
        let recs = run_experiment(&small()).unwrap();
        assert_eq!(recs.len(), 6);
        let keys: Vec<(usize, Scheme)> = recs.iter().map(|r| (r.n, r.scheme)).collect();
        assert_eq!(keys[0], (2, Scheme::Houbolt));
        assert_eq!(keys[2], (2, Scheme::Rk45));
        assert_eq!(keys[3], (4, Scheme::Houbolt));
        assert!(recs
            .iter()
            .all(|r| r.time.is_none() && r.oracle_value.is_some()));
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let mut cfg = small();
        cfg.start = StartMode::Random;
        cfg.n_starts = 3;
        cfg.workers = 1;
        let a = run_experiment(&cfg).unwrap();
        cfg.workers = 3;
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
    }
}
