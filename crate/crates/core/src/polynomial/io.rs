//! Versioned JSON instance files.
//!
//! ```json
//! { "format": 1, "nvars": 2, "degree": 3,
//!   "terms": [ { "coef": -4.0, "exps": [[0, 2], [1, 1]] } ],
//!   "domain": "pm1", "spec": { ... }, "penalty": { "epsilon": 1e-4, "c": 100.0, "r": 2.2 } }
//! ```
//!
//! Terms are written in canonical order. `domain`, `spec` and `penalty` are
//! optional; a missing `domain` means the polynomial is over `{0,1}` variables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Exponents, InstanceSpec, PolyError, SparsePoly};

pub const INSTANCE_FORMAT: u32 = 1;

/// Which Boolean encoding the stored polynomial is written in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Variables in `{0, 1}`.
    #[default]
    Binary,
    /// Variables in `{-1, 1}`.
    Pm1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyBlock {
    pub epsilon: f64,
    pub c: f64,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub coef: f64,
    pub exps: Vec<[u32; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format: u32,
    pub nvars: usize,
    pub degree: u32,
    pub terms: Vec<TermRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<InstanceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<PenaltyBlock>,
}

impl InstanceFile {
    pub fn from_poly(p: &SparsePoly) -> Self {
        InstanceFile {
            format: INSTANCE_FORMAT,
            nvars: p.nvars(),
            degree: p.degree(),
            terms: p
                .terms()
                .iter()
                .map(|t| TermRecord {
                    coef: t.coef,
                    exps: t.exps.pairs().iter().map(|&(v, e)| [v, e]).collect(),
                })
                .collect(),
            domain: None,
            spec: None,
            penalty: None,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_spec(mut self, spec: InstanceSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn domain(&self) -> Domain {
        self.domain.unwrap_or_default()
    }

    pub fn to_poly(&self) -> Result<SparsePoly, PolyError> {
        if self.format != INSTANCE_FORMAT {
            return Err(PolyError::UnsupportedFormat(self.format));
        }
        SparsePoly::from_terms(
            self.nvars,
            self.terms.iter().map(|t| {
                (
                    Exponents::from_pairs(t.exps.iter().map(|&[v, e]| (v as usize, e))),
                    t.coef,
                )
            }),
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PolyError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self, PolyError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), PolyError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Hex SHA-256 of the serialized file.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}
