//! Discrete Laplace mixtures over multi-locus haplotypes.
//!
//! Each of `c` subpopulations has a prior weight `tau_j` and an independent
//! discrete Laplace law at every locus. Components are initialised by PAM,
//! fitted by EM, and the number of components is chosen by BIC.

mod em;
mod pam;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disclap::DiscreteLaplace;
use crate::estimate::{Diagnostics, Method, WoeEstimate};
use crate::haplotype::{DataError, Database, Haplotype};

pub use em::em_fit;
pub use pam::{medoid_cost, pam_init};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("cannot fit {c} components: only {available} distinct haplotypes")]
    TooManyComponents { c: usize, available: usize },
    #[error("cannot fit {c} components to {n} records")]
    TooFewRecords { c: usize, n: usize },
    #[error("component {component} lost all responsibility again after re-seeding")]
    EmptyComponent { component: usize },
    #[error("invalid EM configuration: {0}")]
    Config(String),
    #[error("every candidate component count failed: {0}")]
    AllFailed(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Inclusive range of component counts to try, written `lo..hi` or `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CRange {
    lo: usize,
    hi: usize,
}

impl CRange {
    pub fn new(lo: usize, hi: usize) -> Result<Self, String> {
        if lo == 0 || hi < lo {
            return Err(format!("invalid component range {lo}..{hi}"));
        }
        Ok(CRange { lo, hi })
    }

    pub fn single(c: usize) -> Result<Self, String> {
        CRange::new(c, c)
    }

    /// `1..=min(10, floor(n / 10))`, never empty.
    pub fn default_for(n: usize) -> Self {
        CRange {
            lo: 1,
            hi: (n / 10).clamp(1, 10),
        }
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

impl FromStr for CRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid component count {t:?}"))
        };
        match s.split_once("..") {
            Some((lo, hi)) => CRange::new(parse(lo)?, parse(hi.trim_start_matches('='))?),
            None => CRange::single(parse(s)?),
        }
    }
}

impl TryFrom<String> for CRange {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CRange> for String {
    fn from(r: CRange) -> String {
        r.to_string()
    }
}

impl fmt::Display for CRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Stop when the relative change of the log-likelihood falls below this.
    pub rel_tol: f64,
    /// Candidate component counts; `None` uses [`CRange::default_for`].
    pub c_range: Option<CRange>,
    /// Append the matching profile to the database before fitting.
    pub add_profile_to_db: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iterations: 500,
            rel_tol: 1e-8,
            c_range: None,
            add_profile_to_db: true,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if self.max_iterations == 0 {
            return Err(FitError::Config("max_iterations must be at least 1".into()));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(FitError::Config("rel_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn c_range_for(&self, n: usize) -> CRange {
        self.c_range.unwrap_or_else(|| CRange::default_for(n))
    }
}

/// A fitted `c`-component, `r`-locus discrete Laplace mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedMixture {
    pub tau: Vec<f64>,
    /// `components[j][k]` is the law of locus `k` in subpopulation `j`.
    pub components: Vec<Vec<DiscreteLaplace>>,
    pub loglik_trace: Vec<f64>,
    pub loglik: f64,
    pub bic: f64,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Whether an emptied component had to be re-seeded during fitting.
    pub reseeded: bool,
}

impl FittedMixture {
    pub fn c(&self) -> usize {
        self.tau.len()
    }

    pub fn locus_count(&self) -> usize {
        self.components.first().map_or(0, Vec::len)
    }

    /// Number of free parameters: `c - 1` weights plus a dispersion and a
    /// location per component and locus.
    pub fn parameter_count(&self) -> usize {
        parameter_count(self.c(), self.locus_count())
    }

    /// `ln f(x)` by log-sum-exp over components.
    pub fn ln_pmf(&self, x: &Haplotype) -> Result<f64, DataError> {
        if x.locus_count() != self.locus_count() {
            return Err(DataError::Dimension {
                expected: self.locus_count(),
                found: x.locus_count(),
            });
        }
        Ok(ln_mixture(&self.tau, &self.components, x.alleles()))
    }

    /// Same mixture with components reordered: new component `i` is old `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> FittedMixture {
        FittedMixture {
            tau: perm.iter().map(|&j| self.tau[j]).collect(),
            components: perm.iter().map(|&j| self.components[j].clone()).collect(),
            ..self.clone()
        }
    }
}

pub(crate) fn parameter_count(c: usize, r: usize) -> usize {
    (c - 1) + 2 * c * r
}

pub(crate) fn ln_component(comp: &[DiscreteLaplace], x: &[i32]) -> f64 {
    comp.iter()
        .zip(x)
        .map(|(d, &a)| d.ln_pmf(i64::from(a)))
        .sum()
}

pub(crate) fn ln_mixture(tau: &[f64], components: &[Vec<DiscreteLaplace>], x: &[i32]) -> f64 {
    let terms: Vec<f64> = tau
        .iter()
        .zip(components)
        .map(|(&t, comp)| t.ln() + ln_component(comp, x))
        .collect();
    log_sum_exp(&terms)
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `sum_j tau_j prod_k f(x_k | p_jk, y_jk)`.
pub fn mixture_pmf(fit: &FittedMixture, x: &Haplotype) -> Result<f64, DataError> {
    Ok(fit.ln_pmf(x)?.exp())
}

/// `-2 loglik + k ln n`.
pub fn bic(fit: &FittedMixture, n: usize) -> f64 {
    bic_value(fit.loglik, fit.parameter_count(), n)
}

pub(crate) fn bic_value(loglik: f64, k: usize, n: usize) -> f64 {
    -2.0 * loglik + k as f64 * (n as f64).ln()
}

/// Every candidate fit, in ascending `c`, plus the index of the BIC winner.
#[derive(Debug, Clone)]
pub struct ModelSearch {
    pub candidates: Vec<(usize, Result<FittedMixture, FitError>)>,
    pub best: Option<usize>,
}

impl ModelSearch {
    pub fn selected(&self) -> Option<&FittedMixture> {
        self.best
            .and_then(|i| self.candidates[i].1.as_ref().ok())
    }

    pub fn into_selected(self) -> Result<FittedMixture, FitError> {
        let ModelSearch { candidates, best } = self;
        match best {
            Some(i) => candidates
                .into_iter()
                .nth(i)
                .expect("index in range")
                .1,
            None => Err(FitError::AllFailed(
                candidates
                    .iter()
                    .filter_map(|(c, r)| r.as_ref().err().map(|e| format!("c={c}: {e}")))
                    .collect::<Vec<_>>()
                    .join("; "),
            )),
        }
    }
}

/// Fits every `c` in the configured range concurrently.
pub fn search_models(db: &Database, cfg: &EmConfig) -> ModelSearch {
    let range: Vec<usize> = cfg.c_range_for(db.len()).iter().collect();
    let candidates: Vec<(usize, Result<FittedMixture, FitError>)> = range
        .par_iter()
        .map(|&c| (c, em_fit(db, c, cfg)))
        .collect();
    let mut best: Option<usize> = None;
    for (i, (_, fit)) in candidates.iter().enumerate() {
        if let Ok(fit) = fit {
            let better = match best {
                None => true,
                Some(b) => fit.bic < candidates[b].1.as_ref().map(|f| f.bic).unwrap_or(f64::INFINITY),
            };
            if better {
                best = Some(i);
            }
        }
    }
    ModelSearch { candidates, best }
}

/// The minimum-BIC fit over the configured component range; ties go to the smaller `c`.
pub fn select_model(db: &Database, cfg: &EmConfig) -> Result<FittedMixture, FitError> {
    cfg.validate()?;
    search_models(db, cfg).into_selected()
}

/// Plug-in weight of evidence `log10(1 / f_x)` with `f_x` from the selected mixture.
pub fn woe_dl(db: &Database, x: &Haplotype, cfg: &EmConfig) -> Result<WoeEstimate, FitError> {
    db.check_dimension(x)?;
    if db.is_empty() {
        return Err(DataError::Empty.into());
    }
    let fit_db;
    let data = if cfg.add_profile_to_db {
        fit_db = db.with_record(x.clone())?;
        &fit_db
    } else {
        db
    };
    let fit = select_model(data, cfg)?;
    let f = mixture_pmf(&fit, x)?;
    let lr = 1.0 / f;
    Ok(WoeEstimate {
        method: Method::Dl,
        woe: lr.log10(),
        lr,
        diagnostics: Diagnostics::Mixture {
            components: fit.c(),
            bic: fit.bic,
            loglik: fit.loglik,
            converged: fit.converged,
            iterations: fit.iterations,
            profile_frequency: f,
            database_size: data.len(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dl(p: f64, y: i64) -> DiscreteLaplace {
        DiscreteLaplace::new(p, y).unwrap()
    }

    fn mixture(tau: Vec<f64>, components: Vec<Vec<DiscreteLaplace>>) -> FittedMixture {
        FittedMixture {
            tau,
            components,
            loglik_trace: vec![],
            loglik: -150.0,
            bic: 0.0,
            n: 100,
            converged: true,
            iterations: 1,
            reseeded: false,
        }
    }

    fn hap(a: &[i32]) -> Haplotype {
        Haplotype::new(a.to_vec()).unwrap()
    }

    #[test]
    fn single_component_is_product() {
        let fit = mixture(vec![1.0], vec![vec![dl(0.3, 14), dl(0.2, 30)]]);
        let x = hap(&[15, 28]);
        let want = dl(0.3, 14).pmf(15) * dl(0.2, 30).pmf(28);
        assert!((mixture_pmf(&fit, &x).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn identical_components_collapse() {
        let comp = vec![dl(0.3, 14), dl(0.2, 30)];
        let one = mixture(vec![1.0], vec![comp.clone()]);
        let two = mixture(vec![0.5, 0.5], vec![comp.clone(), comp]);
        let x = hap(&[13, 31]);
        assert!((mixture_pmf(&one, &x).unwrap() - mixture_pmf(&two, &x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn two_component_hand_value() {
        let fit = mixture(vec![0.3, 0.7], vec![vec![dl(0.5, 0)], vec![dl(0.5, 5)]]);
        let want = 0.3 / 3.0 + 0.7 / 3.0 * 0.5f64.powi(5);
        let got = mixture_pmf(&fit, &hap(&[0])).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.10729).abs() < 1e-5);
    }

    #[test]
    fn dimension_mismatch() {
        let fit = mixture(vec![1.0], vec![vec![dl(0.3, 14)]]);
        assert!(mixture_pmf(&fit, &hap(&[1, 2])).is_err());
    }

    #[test]
    fn bic_formula() {
        let fit = mixture(vec![1.0], vec![vec![dl(0.3, 14)]]);
        assert_eq!(fit.parameter_count(), 2);
        let b = bic(&fit, 100);
        assert!((b - (300.0 + 2.0 * 100f64.ln())).abs() < 1e-12);
        assert!((b - 309.21).abs() < 0.005);
        let doubled = bic(&fit, 200);
        assert!((doubled - b - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn c_range_parsing() {
        assert_eq!("1..3".parse::<CRange>().unwrap(), CRange::new(1, 3).unwrap());
        assert_eq!("2..=4".parse::<CRange>().unwrap(), CRange::new(2, 4).unwrap());
        assert_eq!("3".parse::<CRange>().unwrap(), CRange::single(3).unwrap());
        assert!("0..2".parse::<CRange>().is_err());
        assert!("3..1".parse::<CRange>().is_err());
        assert_eq!(CRange::default_for(100), CRange::new(1, 10).unwrap());
        assert_eq!(CRange::default_for(5), CRange::single(1).unwrap());
        assert_eq!(CRange::default_for(57), CRange::new(1, 5).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut cfg = EmConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.max_iterations = 0;
        assert!(cfg.validate().is_err());
        cfg = EmConfig { rel_tol: 0.0, ..EmConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
