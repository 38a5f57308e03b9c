//! Synthetic ground-truth populations drawn from a discrete Laplace mixture.

use std::collections::BTreeMap;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::disclap::DiscreteLaplace;
use crate::good_turing::Population;
use crate::haplotype::Haplotype;

use super::SimulationError;

/// Number of individuals in the standard synthetic population.
pub const STANDARD_POPULATION_SIZE: usize = 20_000;

/// Generating mixture: weights plus a `(p, y)` pair per component and locus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub tau: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub y: Vec<Vec<i64>>,
}

impl MixtureSpec {
    /// Three subpopulations over seven loci, with modal alleles in typical
    /// Y-STR repeat ranges. With 20 000 individuals and databases of 100,
    /// about three quarters of the next draws are new types.
    pub fn standard() -> Self {
        MixtureSpec {
            tau: vec![0.5, 0.3, 0.2],
            p: vec![
                vec![0.170, 0.136, 0.204, 0.153, 0.119, 0.187, 0.170],
                vec![0.204, 0.153, 0.170, 0.136, 0.187, 0.170, 0.153],
                vec![0.153, 0.187, 0.136, 0.204, 0.170, 0.119, 0.187],
            ],
            y: vec![
                vec![14, 13, 30, 24, 11, 13, 13],
                vec![15, 12, 29, 23, 11, 14, 13],
                vec![14, 14, 31, 25, 10, 13, 12],
            ],
        }
    }

    pub fn components(&self) -> usize {
        self.tau.len()
    }

    pub fn locus_count(&self) -> usize {
        self.p.first().map_or(0, Vec::len)
    }

    fn laws(&self) -> Result<Vec<Vec<DiscreteLaplace>>, SimulationError> {
        let c = self.tau.len();
        let bad = |msg: String| SimulationError::Config(format!("mixture: {msg}"));
        if c == 0 {
            return Err(bad("no components".into()));
        }
        if self.p.len() != c || self.y.len() != c {
            return Err(bad(format!("expected {c} rows of p and y")));
        }
        let r = self.locus_count();
        if r == 0 {
            return Err(bad("no loci".into()));
        }
        if self.tau.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(bad("weights must be positive".into()));
        }
        if (self.tau.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(bad("weights must sum to 1".into()));
        }
        self.p
            .iter()
            .zip(&self.y)
            .map(|(ps, ys)| {
                if ps.len() != r || ys.len() != r {
                    return Err(bad(format!("every component needs {r} loci")));
                }
                ps.iter()
                    .zip(ys)
                    .map(|(&p, &y)| DiscreteLaplace::new(p, y).map_err(|e| bad(e.to_string())))
                    .collect()
            })
            .collect()
    }

    /// Mixture probability of a haplotype.
    pub fn pmf(&self, x: &Haplotype) -> Result<f64, SimulationError> {
        let laws = self.laws()?;
        Ok(self
            .tau
            .iter()
            .zip(&laws)
            .map(|(t, comp)| {
                t * comp
                    .iter()
                    .zip(x.alleles())
                    .map(|(d, &a)| d.pmf(i64::from(a)))
                    .product::<f64>()
            })
            .sum())
    }
}

/// Draws `size` haplotypes from the mixture and returns their empirical
/// frequencies as the population.
pub fn synth_population(spec: &MixtureSpec, size: usize, seed: u64) -> Result<Population, SimulationError> {
    if size == 0 {
        return Err(SimulationError::Config("population size must be at least 1".into()));
    }
    let laws = spec.laws()?;
    let pick = WeightedIndex::new(&spec.tau).map_err(|e| SimulationError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<Haplotype, usize> = BTreeMap::new();
    for _ in 0..size {
        let comp = &laws[pick.sample(&mut rng)];
        let alleles = comp
            .iter()
            .map(|d| {
                i32::try_from(d.sample(&mut rng))
                    .map_err(|_| SimulationError::Config("sampled allele overflows i32".into()))
            })
            .collect::<Result<Vec<i32>, _>>()?;
        *counts.entry(Haplotype::new(alleles)?).or_insert(0) += 1;
    }
    let types = counts
        .into_iter()
        .map(|(h, c)| (h, c as f64 / size as f64))
        .collect();
    Ok(Population::new(types)?)
}
