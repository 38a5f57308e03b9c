//! Singleton/doubleton estimators for the rare type match.
//!
//! With an i.i.d. sample `Y_1..Y_N` from type probabilities `p_1..p_S`:
//!
//! * `theta_1(N) = P(Y_N not in {Y_1..Y_{N-1}}) = sum_s p_s (1 - p_s)^(N-1)`
//! * `theta_2(N) = P(Y_N = Y_{N-1}, Y_N not in {Y_1..Y_{N-2}}) = sum_s p_s^2 (1 - p_s)^(N-2)`
//!
//! and more generally `theta_m(N) = sum_s p_s^m (1 - p_s)^(N-m)`. The count of
//! types seen exactly `m` times, divided by `C(N, m)`, is unbiased for
//! `theta_m(N)`. The likelihood ratio is estimated as `theta_1 / theta_2`.

use std::collections::HashMap;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{Diagnostics, EstimatorError, Method, WoeEstimate};
use crate::haplotype::{Database, FrequencySpectrum, Haplotype};

/// `(theta_1, theta_2)` for a database of size `n_basis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaPair {
    pub theta1: f64,
    pub theta2: f64,
    pub n_basis: usize,
}

impl ThetaPair {
    pub fn from_spectrum(spec: &FrequencySpectrum) -> Result<Self, EstimatorError> {
        Ok(ThetaPair {
            theta1: theta1_hat(spec),
            theta2: theta2_hat(spec)?,
            n_basis: spec.n(),
        })
    }
}

pub fn theta1_hat(spec: &FrequencySpectrum) -> f64 {
    spec.singletons() as f64 / spec.n() as f64
}

pub fn theta2_hat(spec: &FrequencySpectrum) -> Result<f64, EstimatorError> {
    let n = spec.n();
    if n < 2 {
        return Err(EstimatorError::TooFewRecords { needed: 2, found: n });
    }
    Ok(2.0 * spec.doubletons() as f64 / (n as f64 * (n - 1) as f64))
}

/// `N_m / C(N, m)`.
pub fn theta_m_hat(spec: &FrequencySpectrum, m: usize) -> Result<f64, EstimatorError> {
    let n = spec.n();
    if m == 0 || m > n {
        return Err(EstimatorError::Multiplicity { m, n });
    }
    Ok(spec.count(m) as f64 / binomial(n, m))
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `log10((N - 1) N_1 / (2 N_2))`.
pub fn woe_gg(spec: &FrequencySpectrum) -> Result<WoeEstimate, EstimatorError> {
    let n = spec.n();
    if n < 2 {
        return Err(EstimatorError::TooFewRecords { needed: 2, found: n });
    }
    let (n1, n2) = (spec.singletons(), spec.doubletons());
    if n2 == 0 {
        return Err(EstimatorError::NoDoubletons);
    }
    if n1 == 0 {
        return Err(EstimatorError::NoSingletons);
    }
    let lr = (n - 1) as f64 * n1 as f64 / (2.0 * n2 as f64);
    let approx = n as f64 * n1 as f64 / (2.0 * n2 as f64);
    Ok(WoeEstimate {
        method: Method::Gg,
        woe: lr.log10(),
        lr,
        diagnostics: Diagnostics::Spectrum {
            n,
            singletons: n1,
            doubletons: n2,
            approx_woe: Some(approx.log10()),
        },
    })
}

/// Brenner's kappa estimate of the likelihood ratio, `N^2 / (N - N_1)`.
pub fn brenner_kappa(spec: &FrequencySpectrum) -> Result<f64, EstimatorError> {
    let (n, n1) = (spec.n(), spec.singletons());
    if n1 == n {
        return Err(EstimatorError::AllSingletons);
    }
    let n = n as f64;
    Ok(n * n / (n - n1 as f64))
}

pub fn woe_kappa(spec: &FrequencySpectrum) -> Result<WoeEstimate, EstimatorError> {
    let lr = brenner_kappa(spec)?;
    Ok(WoeEstimate {
        method: Method::Kappa,
        woe: lr.log10(),
        lr,
        diagnostics: Diagnostics::Spectrum {
            n: spec.n(),
            singletons: spec.singletons(),
            doubletons: spec.doubletons(),
            approx_woe: None,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PopulationError {
    #[error("population has no types")]
    Empty,
    #[error("type {index} has non-positive or non-finite probability {p}")]
    BadProbability { index: usize, p: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalised(f64),
    #[error("haplotype {0} listed twice")]
    Duplicate(String),
    #[error("types have inconsistent locus counts")]
    Dimension,
    #[error("locus index {index} out of range for {loci} loci")]
    LocusOutOfRange { index: usize, loci: usize },
}

/// A fully known population: distinct haplotypes with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    types: Vec<(Haplotype, f64)>,
    index: HashMap<Haplotype, usize>,
}

impl Population {
    pub fn new(types: Vec<(Haplotype, f64)>) -> Result<Self, PopulationError> {
        let r = types.first().ok_or(PopulationError::Empty)?.0.locus_count();
        let mut index = HashMap::with_capacity(types.len());
        for (i, (h, p)) in types.iter().enumerate() {
            if !(p.is_finite() && *p > 0.0) {
                return Err(PopulationError::BadProbability { index: i, p: *p });
            }
            if h.locus_count() != r {
                return Err(PopulationError::Dimension);
            }
            if index.insert(h.clone(), i).is_some() {
                return Err(PopulationError::Duplicate(h.to_string()));
            }
        }
        let total = compensated_sum(types.iter().map(|(_, p)| *p));
        if (total - 1.0).abs() > 1e-12 {
            return Err(PopulationError::NotNormalised(total));
        }
        Ok(Population { types, index })
    }

    /// Relative frequencies of the database records, types sorted by haplotype.
    pub fn from_database(db: &Database) -> Result<Self, PopulationError> {
        let n = db.len() as f64;
        let mut types: Vec<(Haplotype, f64)> = db
            .distinct_with_counts()
            .into_iter()
            .map(|(h, c)| (h.clone(), c as f64 / n))
            .collect();
        types.sort_by(|a, b| a.0.cmp(&b.0));
        Population::new(types)
    }

    /// Marginal population on the listed loci; types that coincide are merged.
    pub fn restrict_loci(&self, loci: &[usize]) -> Result<Self, PopulationError> {
        let r = self.locus_count();
        if let Some(&index) = loci.iter().find(|&&k| k >= r) {
            return Err(PopulationError::LocusOutOfRange { index, loci: r });
        }
        if loci.is_empty() {
            return Err(PopulationError::Dimension);
        }
        let mut merged: std::collections::BTreeMap<Haplotype, Vec<f64>> = Default::default();
        for (h, p) in &self.types {
            merged.entry(h.project(loci)).or_default().push(*p);
        }
        let types = merged
            .into_iter()
            .map(|(h, ps)| (h, compensated_sum(ps.into_iter())))
            .collect::<Vec<_>>();
        // Re-normalise away the last ulps of rounding from the merge.
        let total = compensated_sum(types.iter().map(|(_, p)| *p));
        Population::new(types.into_iter().map(|(h, p)| (h, p / total)).collect())
    }

    pub fn types(&self) -> &[(Haplotype, f64)] {
        &self.types
    }

    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    pub fn locus_count(&self) -> usize {
        self.types[0].0.locus_count()
    }

    /// Probability of `h`, zero if it is not a type of this population.
    pub fn frequency(&self, h: &Haplotype) -> f64 {
        self.index.get(h).map_or(0.0, |&i| self.types[i].1)
    }

    pub fn sampler(&self) -> PopulationSampler<'_> {
        PopulationSampler {
            population: self,
            dist: WeightedIndex::new(self.types.iter().map(|(_, p)| *p)).expect("validated weights"),
        }
    }
}

/// Draws i.i.d. haplotypes from a [`Population`].
pub struct PopulationSampler<'a> {
    population: &'a Population,
    dist: WeightedIndex<f64>,
}

impl PopulationSampler<'_> {
    pub fn population(&self) -> &Population {
        self.population
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &Haplotype {
        &self.population.types[self.dist.sample(rng)].0
    }
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `sum_s p_s^m (1 - p_s)^(n - m)`.
pub fn theta_exact(pop: &Population, n: usize, m: usize) -> f64 {
    assert!(m >= 1 && n >= m, "theta_exact requires n >= m >= 1");
    let (m, rest) = (m as i32, (n - m) as i32);
    compensated_sum(
        pop.types
            .iter()
            .map(|(_, p)| p.powi(m) * (1.0 - p).powi(rest)),
    )
}

/// The true pair for a database of size `n`: `P(Y_{n+1} new)` and
/// `P(Y_{n+1} new, Y_{n+2} = Y_{n+1})`.
pub fn theta_pair_exact(pop: &Population, n: usize) -> ThetaPair {
    ThetaPair {
        theta1: theta_exact(pop, n + 1, 1),
        theta2: theta_exact(pop, n + 2, 2),
        n_basis: n,
    }
}

/// True weight `log10(theta_1 / theta_2)` for a database of size `n`, with the
/// suspect as observation `n + 1` and the stain as observation `n + 2`.
pub fn woe_gg_true(pop: &Population, n: usize) -> Result<f64, EstimatorError> {
    if n < 1 {
        return Err(EstimatorError::TooFewRecords { needed: 1, found: n });
    }
    let pair = theta_pair_exact(pop, n);
    if pair.theta2 <= 0.0 || pair.theta1 <= 0.0 {
        return Err(EstimatorError::ZeroTheta);
    }
    Ok((pair.theta1 / pair.theta2).log10())
}
