//! Run configuration: one JSON document per experiment.
//!
//! ```json
//! {
//!   "lattice": {"k_fermi": 1, "delta": "1/2", "support": [[0, 0, 1]]},
//!   "couplings": [-1, "-1/2", "1/2", 1],
//!   "lambda_values": [-1, 0, 1, 2, "7/3"],
//!   "formfactor": "unit",
//!   "formfactor_mode": "symmetrize",
//!   "caps": {"degree": 8, "basis": 2000000, "dense": 4096, "iterations": 600},
//!   "seed": 0,
//!   "output_dir": "out"
//! }
//! ```
//!
//! Every field except `lattice` has a default. `formfactor` is `"unit"`,
//! `"random:<seed>"`, `"skewed:<seed>"` or a list of
//! `{"k1": [x, y, z], "k2": [x, y, z], "value": "p/q"}` entries.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{int, ratio, Exact};
use crate::fock::DEFAULT_BASIS_CAP;
use crate::lattice::{KVector, LatticeConfig};
use crate::model::{Formfactor, FormfactorMode};
use crate::operator::DEFAULT_DEGREE_CAP;
use crate::spectra::{SolverOptions, DEFAULT_DENSE_LIMIT, DEFAULT_MAX_ITER};
use crate::verify::BatteryOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub k1: KVector,
    pub k2: KVector,
    pub value: Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormfactorSpec {
    Named(String),
    Table(Vec<TableEntry>),
}

impl Default for FormfactorSpec {
    fn default() -> Self {
        FormfactorSpec::Named("unit".into())
    }
}

impl FormfactorSpec {
    pub fn resolve(&self) -> Result<Formfactor> {
        match self {
            FormfactorSpec::Named(s) => s.parse(),
            FormfactorSpec::Table(entries) => {
                let mut t = BTreeMap::new();
                for e in entries {
                    if t.insert((e.k1, e.k2), e.value.0.clone()).is_some() {
                        return Err(Error::Config(format!("formfactor entry ({}, {}) listed twice", e.k1, e.k2)));
                    }
                }
                Ok(Formfactor::Table(t))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Caps {
    /// Largest operator degree produced by a product.
    pub degree: usize,
    /// Largest sector dimension that may be enumerated.
    pub basis: usize,
    /// Largest sector dimension diagonalized densely.
    pub dense: usize,
    /// Lanczos iteration limit above `dense`.
    pub iterations: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            degree: DEFAULT_DEGREE_CAP,
            basis: DEFAULT_BASIS_CAP,
            dense: DEFAULT_DENSE_LIMIT,
            iterations: DEFAULT_MAX_ITER,
        }
    }
}

fn default_couplings() -> Vec<Exact> {
    [int(-1), ratio(-1, 2), ratio(1, 2), int(1)].into_iter().map(Exact).collect()
}

fn default_lambdas() -> Vec<Exact> {
    [int(-1), int(0), int(1), int(2), ratio(7, 3)].into_iter().map(Exact).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    #[serde(default = "default_couplings")]
    pub couplings: Vec<Exact>,
    #[serde(default = "default_lambdas")]
    pub lambda_values: Vec<Exact>,
    #[serde(default)]
    pub formfactor: FormfactorSpec,
    #[serde(default)]
    pub formfactor_mode: FormfactorMode,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(lattice: LatticeConfig) -> Self {
        RunConfig {
            lattice,
            couplings: default_couplings(),
            lambda_values: default_lambdas(),
            formfactor: FormfactorSpec::default(),
            formfactor_mode: FormfactorMode::default(),
            caps: Caps::default(),
            seed: 0,
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        self.formfactor.resolve()?;
        if self.caps.degree < 4 {
            return Err(Error::Config("caps.degree must be at least 4".into()));
        }
        Ok(())
    }

    pub fn battery_options(&self) -> Result<BatteryOptions> {
        Ok(BatteryOptions {
            couplings: self.couplings.iter().map(|e| e.0.clone()).collect(),
            lambdas: self.lambda_values.iter().map(|e| e.0.clone()).collect(),
            formfactor: self.formfactor.resolve()?,
            formfactor_mode: self.formfactor_mode,
            seed: self.seed,
            degree_cap: self.caps.degree,
            ..BatteryOptions::default()
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            dense_limit: self.caps.dense,
            basis_cap: self.caps.basis,
            max_iter: self.caps.iterations,
            ..SolverOptions::default()
        }
    }
}
