//! TOML experiment configuration.
//!
//! ```toml
//! seed = 42
//!
//! [population]
//! source = "standard"   # or "synthetic" (with tau, p, y) or "file" (with path)
//! size = 20000
//!
//! [sampling]
//! db_size = 100
//! replicates = 500
//! loci = [0, 1, 2, 3, 4, 5, 6]
//!
//! [methods]
//! run = ["dl", "gg"]
//!
//! [em]
//! c_range = "1..10"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::estimate::Method;
use crate::mixture::EmConfig;

use super::synth::{MixtureSpec, STANDARD_POPULATION_SIZE};
use super::{ExperimentConfig, PopulationSource, SimulationError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub seed: Option<u64>,
    pub population: PopulationSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub methods: MethodsSection,
    #[serde(default)]
    pub em: EmConfig,
}

/// Population seeds default to the experiment seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum PopulationSection {
    Standard {
        size: Option<usize>,
        seed: Option<u64>,
    },
    Synthetic {
        size: usize,
        seed: Option<u64>,
        tau: Vec<f64>,
        p: Vec<Vec<f64>>,
        y: Vec<Vec<i64>>,
    },
    File {
        /// Relative paths resolve against the config file's directory.
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub db_size: usize,
    pub replicates: usize,
    pub loci: Option<Vec<usize>>,
    pub max_attempts: Option<usize>,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection {
            db_size: 100,
            replicates: 1000,
            loci: None,
            max_attempts: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodsSection {
    pub run: Vec<Method>,
}

impl Default for MethodsSection {
    fn default() -> Self {
        MethodsSection {
            run: vec![Method::Dl, Method::Gg],
        }
    }
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self, SimulationError> {
        toml::from_str(text).map_err(|e| SimulationError::Config(e.to_string()))
    }

    /// Resolves into a runnable config. `seed_override` wins over the file's seed;
    /// one of the two must be present.
    pub fn into_config(self, base_dir: &Path, seed_override: Option<u64>) -> Result<ExperimentConfig, SimulationError> {
        let seed = seed_override
            .or(self.seed)
            .ok_or_else(|| SimulationError::Config("a seed is required".into()))?;
        let population = match self.population {
            PopulationSection::Standard { size, seed: pop_seed } => PopulationSource::Standard {
                size: size.unwrap_or(STANDARD_POPULATION_SIZE),
                seed: pop_seed.unwrap_or(seed),
            },
            PopulationSection::Synthetic {
                size,
                seed: pop_seed,
                tau,
                p,
                y,
            } => PopulationSource::Synthetic {
                mixture: MixtureSpec { tau, p, y },
                size,
                seed: pop_seed.unwrap_or(seed),
            },
            PopulationSection::File { path } => PopulationSource::File(if path.is_absolute() {
                path
            } else {
                base_dir.join(path)
            }),
        };
        let cfg = ExperimentConfig {
            population,
            db_size: self.sampling.db_size,
            replicates: self.sampling.replicates,
            loci: self.sampling.loci,
            methods: self.methods.run,
            seed,
            em: self.em,
            max_attempts: self.sampling.max_attempts,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
