use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::integrators::{Scheme, SchemeParams, TauMode};
use crate::polynomial::{Domain, InstanceSpec};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartMode {
    /// A single run from `U0 = 0`, `V0 = 0`.
    Zero,
    /// `n_starts` runs from uniform points in `[-1, 1]^n`.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceConfig {
    pub coeff_lo: i64,
    pub coeff_hi: i64,
    /// Sparsity is drawn uniformly from `[sparsity_lo, sparsity_hi]` per cell.
    pub sparsity_lo: f64,
    pub sparsity_hi: f64,
    pub domain: Domain,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            coeff_lo: -10,
            coeff_hi: 10,
            sparsity_lo: 1.0,
            sparsity_hi: 1.0,
            domain: Domain::Pm1,
        }
    }
}

/// Per-scheme settings layered over [`ExperimentConfig::params`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeOverride {
    pub tau0: Option<f64>,
    pub tau_mode: Option<TauMode>,
    pub theta: Option<f64>,
    pub tau_star: Option<f64>,
    pub max_iters: Option<usize>,
}

impl SchemeOverride {
    fn apply(&self, p: &mut SchemeParams) {
        if self.tau0.is_some() {
            p.tau0 = self.tau0;
        }
        if let Some(m) = self.tau_mode {
            p.tau_mode = m;
        }
        if let Some(t) = self.theta {
            p.theta = t;
        }
        if self.tau_star.is_some() {
            p.tau_star = self.tau_star;
        }
        if let Some(k) = self.max_iters {
            p.max_iters = k;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// `(n, d)` cells.
    pub grid: Vec<[u32; 2]>,
    pub schemes: Vec<Scheme>,
    pub epsilons: Vec<f64>,
    pub c: f64,
    pub n_starts: usize,
    pub start: StartMode,
    /// Oracle results are attached for `n <= oracle_max_n`.
    pub oracle_max_n: usize,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
    /// Store wall times in records. Off keeps run logs byte-reproducible.
    pub record_timing: bool,
    pub keep_trajectories: bool,
    pub instance: InstanceConfig,
    pub params: SchemeParams,
    pub houbolt: SchemeOverride,
    pub lie: SchemeOverride,
    pub rk45: SchemeOverride,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            seed: 1,
            grid: vec![[2, 4]],
            schemes: Scheme::ALL.to_vec(),
            epsilons: vec![1e-4],
            c: 100.0,
            n_starts: 1,
            start: StartMode::Zero,
            oracle_max_n: 12,
            workers: 0,
            record_timing: false,
            keep_trajectories: false,
            instance: InstanceConfig::default(),
            params: SchemeParams {
                tau_mode: TauMode::Fixed,
                ..SchemeParams::default()
            },
            houbolt: SchemeOverride::default(),
            lie: SchemeOverride::default(),
            rk45: SchemeOverride::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.grid.is_empty() {
            return bad("grid must not be empty".into());
        }
        if let Some([n, d]) = self.grid.iter().find(|[n, d]| *n == 0 || *d == 0) {
            return bad(format!("grid cell ({n}, {d}) needs n >= 1 and d >= 1"));
        }
        if self.schemes.is_empty() {
            return bad("no scheme selected".into());
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return bad("epsilons must be a non-empty list of positive values".into());
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return bad("c must be non-negative".into());
        }
        if self.n_starts == 0 {
            return bad("n_starts must be at least 1".into());
        }
        let i = &self.instance;
        if !(0.0 < i.sparsity_lo && i.sparsity_lo <= i.sparsity_hi && i.sparsity_hi <= 1.0) {
            return bad("need 0 < sparsity_lo <= sparsity_hi <= 1".into());
        }
        for s in &self.schemes {
            self.params_for(*s)
                .validate()
                .map_err(|e| HarnessError::Config(format!("{s}: {e}")))?;
        }
        Ok(())
    }

    pub fn params_for(&self, scheme: Scheme) -> SchemeParams {
        let mut p = self.params.clone();
        match scheme {
            Scheme::Houbolt => {
                self.houbolt.apply(&mut p);
                p.tau_mode = TauMode::Fixed;
            }
            Scheme::Lie => self.lie.apply(&mut p),
            Scheme::Rk45 => self.rk45.apply(&mut p),
        }
        p.keep_trajectory = self.keep_trajectories;
        p
    }

    /// Seed of cell `(n, d)`; independent of the other cells in the grid.
    pub fn cell_seed(&self, n: u32, d: u32) -> u64 {
        derive_seed(self.seed, &[n as u64, d as u64])
    }

    pub fn instance_spec(&self, n: u32, d: u32) -> InstanceSpec {
        use rand::Rng as _;
        let seed = self.cell_seed(n, d);
        let i = &self.instance;
        let sparsity = if i.sparsity_lo < i.sparsity_hi {
            let mut rng = rng_from_seed(derive_seed(seed, &[0x5ba5]));
            rng.gen_range(i.sparsity_lo..=i.sparsity_hi)
        } else {
            i.sparsity_hi
        };
        InstanceSpec::new(n as usize, d, seed)
            .with_coeff_range(i.coeff_lo, i.coeff_hi)
            .with_sparsity(sparsity)
    }

    /// Seed of the random starts for one `(cell, ε, scheme)` task.
    pub fn start_seed(&self, n: u32, d: u32) -> u64 {
        derive_seed(self.cell_seed(n, d), &[0x57a7])
    }
}
