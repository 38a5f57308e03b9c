//! Monte Carlo error experiments against a known population.
//!
//! Each replicate draws a database of `N` haplotypes i.i.d. from the
//! population, then draws further haplotypes until one is absent from the
//! database; that haplotype is the matching profile. Every enabled method
//! estimates the weight of evidence, which is compared with its true value
//! computed from the population.

mod config_file;
mod report;
mod stats;
mod synth;

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::estimate::{woe_naive, EstimatorError, Method};
use crate::good_turing::{theta_pair_exact, woe_gg, woe_gg_true, woe_kappa, Population, PopulationError, PopulationSampler, ThetaPair};
use crate::haplotype::{frequency_spectrum, parse_database, DataError, Database, Haplotype};
use crate::mixture::{woe_dl, EmConfig};

pub use config_file::{ExperimentFile, MethodsSection, PopulationSection, SamplingSection};
pub use report::{boxplot_csv, records_csv, summary_json, summary_table};
pub use stats::{boxplot_data, quantile_sorted, summarize, BoxplotData, StatsError, SummaryStats};
pub use synth::{synth_population, MixtureSpec, STANDARD_POPULATION_SIZE};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read population file {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Where the ground-truth population comes from.
#[derive(Debug, Clone)]
pub enum PopulationSource {
    /// [`MixtureSpec::standard`] with the given size and seed.
    Standard { size: usize, seed: u64 },
    Synthetic { mixture: MixtureSpec, size: usize, seed: u64 },
    /// A haplotype database whose relative frequencies define the population.
    File(PathBuf),
    Explicit(Population),
}

impl PopulationSource {
    pub fn resolve(&self) -> Result<Population, SimulationError> {
        match self {
            PopulationSource::Standard { size, seed } => synth_population(&MixtureSpec::standard(), *size, *seed),
            PopulationSource::Synthetic { mixture, size, seed } => synth_population(mixture, *size, *seed),
            PopulationSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| SimulationError::Io {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                Ok(Population::from_database(&parse_database(&text)?)?)
            }
            PopulationSource::Explicit(pop) => Ok(pop.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub population: PopulationSource,
    /// Database size `N`.
    pub db_size: usize,
    /// Number of replicates `M`.
    pub replicates: usize,
    /// Loci to keep, 0-based; `None` keeps all.
    pub loci: Option<Vec<usize>>,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub em: EmConfig,
    /// Draws allowed when looking for an unseen profile; defaults to `10 N`.
    pub max_attempts: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(population: PopulationSource, seed: u64) -> Self {
        ExperimentConfig {
            population,
            db_size: 100,
            replicates: 1000,
            loci: None,
            methods: vec![Method::Dl, Method::Gg],
            seed,
            em: EmConfig::default(),
            max_attempts: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: &str| Err(SimulationError::Config(m.to_string()));
        if self.db_size < 2 {
            return bad("db_size must be at least 2");
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        if matches!(&self.loci, Some(l) if l.is_empty()) {
            return bad("loci subset is empty");
        }
        if self.max_attempts == Some(0) {
            return bad("max_attempts must be at least 1");
        }
        self.em.validate().map_err(|e| SimulationError::Config(e.to_string()))
    }

    fn attempts(&self) -> usize {
        self.max_attempts.unwrap_or(10 * self.db_size)
    }
}

/// A sampled database plus a matching profile absent from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub database: Database,
    pub profile: Haplotype,
    /// Draws needed to find the unseen profile.
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no unseen haplotype after {0} draws")]
pub struct RejectionExhausted(pub usize);

/// `n` i.i.d. draws, then rejection sampling for an unseen `(n+1)`st haplotype.
pub fn sample_match_scenario<R: Rng + ?Sized>(
    sampler: &PopulationSampler<'_>,
    n: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Result<Scenario, RejectionExhausted> {
    let records: Vec<Haplotype> = (0..n).map(|_| sampler.draw(rng).clone()).collect();
    let database = Database::new(sampler.population().locus_count(), records).expect("population types share a locus count");
    for attempt in 1..=max_attempts {
        let x = sampler.draw(rng);
        if !database.contains(x) {
            return Ok(Scenario {
                database,
                profile: x.clone(),
                attempts: attempt,
            });
        }
    }
    Err(RejectionExhausted(max_attempts))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The estimator is undefined for this database (e.g. no doubletons).
    Undefined(String),
    FitFailed(String),
    ScenarioFailed,
}

impl Status {
    pub fn code(&self) -> String {
        match self {
            Status::Ok => "ok".into(),
            Status::Undefined(reason) => format!("undefined:{reason}"),
            Status::FitFailed(_) => "fit_failed".into(),
            Status::ScenarioFailed => "scenario_failed".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub estimate: Option<f64>,
    pub truth: Option<f64>,
    /// `estimate - truth`, present only when both are defined.
    pub error: Option<f64>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub profile: Option<Haplotype>,
    pub singletons: Option<usize>,
    pub doubletons: Option<usize>,
    /// `log10(1 / f_x)` for the drawn profile.
    pub truth_profile: Option<f64>,
    /// `log10(theta_1 / theta_2)` for the population.
    pub truth_gg: Option<f64>,
    pub outcomes: Vec<MethodOutcome>,
}

impl ReplicateRecord {
    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub n_effective: usize,
    pub n_excluded: usize,
    /// Exclusion reasons with their counts, sorted by reason.
    pub exclusions: Vec<(String, usize)>,
    pub estimate: Option<SummaryStats>,
    pub truth: Option<SummaryStats>,
    pub error: Option<SummaryStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationInfo {
    pub types: usize,
    pub loci: usize,
    pub theta: ThetaPair,
    pub truth_gg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub db_size: usize,
    pub replicates: usize,
    pub seed: u64,
    pub population: PopulationInfo,
    pub records: Vec<ReplicateRecord>,
    pub summaries: Vec<MethodSummary>,
}

impl ExperimentResult {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}

/// Generator for replicate `index`: the master seed selects the key and the
/// index selects the stream, so replicates are independent of execution order.
pub fn replicate_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, SimulationError> {
    cfg.validate()?;
    let mut population = cfg.population.resolve()?;
    if let Some(loci) = &cfg.loci {
        population = population.restrict_loci(loci)?;
    }
    let population = population;
    let sampler = population.sampler();
    let truth_gg = woe_gg_true(&population, cfg.db_size).ok();

    let records: Vec<ReplicateRecord> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| run_replicate(cfg, &sampler, truth_gg, i))
        .collect();

    let summaries = cfg
        .methods
        .iter()
        .map(|&m| summarize_method(m, &records))
        .collect();

    Ok(ExperimentResult {
        db_size: cfg.db_size,
        replicates: cfg.replicates,
        seed: cfg.seed,
        population: PopulationInfo {
            types: population.type_count(),
            loci: population.locus_count(),
            theta: theta_pair_exact(&population, cfg.db_size),
            truth_gg,
        },
        records,
        summaries,
    })
}

fn run_replicate(cfg: &ExperimentConfig, sampler: &PopulationSampler<'_>, truth_gg: Option<f64>, index: usize) -> ReplicateRecord {
    let mut rng = replicate_rng(cfg.seed, index);
    let scenario = match sample_match_scenario(sampler, cfg.db_size, cfg.attempts(), &mut rng) {
        Ok(s) => s,
        Err(_) => {
            return ReplicateRecord {
                replicate: index,
                profile: None,
                singletons: None,
                doubletons: None,
                truth_profile: None,
                truth_gg,
                outcomes: cfg
                    .methods
                    .iter()
                    .map(|&method| MethodOutcome {
                        method,
                        estimate: None,
                        truth: None,
                        error: None,
                        status: Status::ScenarioFailed,
                    })
                    .collect(),
            }
        }
    };
    let spec = frequency_spectrum(&scenario.database).expect("database has N >= 2 records");
    let f_x = sampler.population().frequency(&scenario.profile);
    let truth_profile = Some((1.0 / f_x).log10()).filter(|t| t.is_finite());

    let outcomes = cfg
        .methods
        .iter()
        .map(|&method| {
            let (estimate, truth) = match method {
                Method::Dl => (
                    woe_dl(&scenario.database, &scenario.profile, &cfg.em).map_err(|e| Status::FitFailed(e.to_string())),
                    truth_profile,
                ),
                Method::Gg => (woe_gg(&spec).map_err(undefined), truth_gg),
                Method::Kappa => (woe_kappa(&spec).map_err(undefined), truth_gg),
                Method::Naive => (woe_naive(&scenario.database, &scenario.profile).map_err(undefined), truth_profile),
            };
            match estimate {
                Ok(est) => MethodOutcome {
                    method,
                    estimate: Some(est.woe),
                    truth,
                    error: truth.map(|t| est.woe - t),
                    status: Status::Ok,
                },
                Err(status) => MethodOutcome {
                    method,
                    estimate: None,
                    truth,
                    error: None,
                    status,
                },
            }
        })
        .collect();

    ReplicateRecord {
        replicate: index,
        profile: Some(scenario.profile),
        singletons: Some(spec.singletons()),
        doubletons: Some(spec.doubletons()),
        truth_profile,
        truth_gg,
        outcomes,
    }
}

fn undefined(e: EstimatorError) -> Status {
    Status::Undefined(e.code().to_string())
}

/// Replicates with an estimate, a truth and an error count as effective;
/// all others are excluded.
fn summarize_method(method: Method, records: &[ReplicateRecord]) -> MethodSummary {
    let mut estimates = Vec::new();
    let mut truths = Vec::new();
    let mut errors = Vec::new();
    let mut exclusions: std::collections::BTreeMap<String, usize> = Default::default();
    for rec in records {
        let Some(o) = rec.outcome(method) else { continue };
        match (o.estimate, o.truth, o.error) {
            (Some(e), Some(t), Some(err)) => {
                estimates.push(e);
                truths.push(t);
                errors.push(err);
            }
            _ => {
                let reason = match &o.status {
                    Status::Ok => "undefined:truth".to_string(),
                    s => s.code(),
                };
                *exclusions.entry(reason).or_insert(0) += 1;
            }
        }
    }
    let n_excluded = exclusions.values().sum();
    let stats = |v: &[f64]| summarize(v).ok().map(|s| s.with_excluded(n_excluded));
    MethodSummary {
        method,
        n_effective: estimates.len(),
        n_excluded,
        exclusions: exclusions.into_iter().collect(),
        estimate: stats(&estimates),
        truth: stats(&truths),
        error: stats(&errors),
    }
}
