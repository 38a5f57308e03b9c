//! Weight-of-evidence estimates shared by all methods, and the naive
//! relative-frequency estimator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::haplotype::{relative_frequency, DataError, Database, Haplotype};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Discrete Laplace mixture plug-in.
    Dl,
    /// Singleton/doubleton (generalized Good) estimator.
    Gg,
    /// Brenner's kappa method.
    Kappa,
    /// Inverse relative frequency in the database.
    Naive,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Dl, Method::Gg, Method::Kappa, Method::Naive];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Dl => "dl",
            Method::Gg => "gg",
            Method::Kappa => "kappa",
            Method::Naive => "naive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dl" => Ok(Method::Dl),
            "gg" => Ok(Method::Gg),
            "kappa" => Ok(Method::Kappa),
            "naive" => Ok(Method::Naive),
            other => Err(format!("unknown method {other:?} (expected dl, gg, kappa or naive)")),
        }
    }
}

/// Method-specific information reported next to an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    Mixture {
        components: usize,
        bic: f64,
        loglik: f64,
        converged: bool,
        iterations: usize,
        profile_frequency: f64,
        database_size: usize,
    },
    Spectrum {
        n: usize,
        singletons: usize,
        doubletons: usize,
        /// The estimate with `N` in place of `N - 1` in the numerator.
        approx_woe: Option<f64>,
    },
    Naive {
        count: usize,
        n: usize,
    },
}

/// A log10 likelihood ratio tagged with the method that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoeEstimate {
    pub method: Method,
    /// log10 of the likelihood ratio.
    pub woe: f64,
    /// The likelihood ratio itself.
    pub lr: f64,
    pub diagnostics: Diagnostics,
}

/// Ways an estimator can be undefined for a given database.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimatorError {
    #[error("estimator undefined: no doubletons")]
    NoDoubletons,
    #[error("estimator undefined: no singletons (zero estimate)")]
    NoSingletons,
    #[error("estimator undefined: every record is a singleton")]
    AllSingletons,
    #[error("estimator undefined: profile has zero frequency")]
    ZeroFrequency,
    #[error("estimator undefined: true weight has zero denominator")]
    ZeroTheta,
    #[error("need at least {needed} records, found {found}")]
    TooFewRecords { needed: usize, found: usize },
    #[error("multiplicity {m} outside 1..={n}")]
    Multiplicity { m: usize, n: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

impl EstimatorError {
    /// Short machine-readable tag, e.g. `no_doubletons`.
    pub fn code(&self) -> &'static str {
        match self {
            EstimatorError::NoDoubletons => "no_doubletons",
            EstimatorError::NoSingletons => "no_singletons",
            EstimatorError::AllSingletons => "all_singletons",
            EstimatorError::ZeroFrequency => "zero_frequency",
            EstimatorError::ZeroTheta => "zero_theta",
            EstimatorError::TooFewRecords { .. } => "too_few_records",
            EstimatorError::Multiplicity { .. } => "multiplicity",
            EstimatorError::Data(_) => "data",
        }
    }

    /// Whether this is a property of the data (an undefined estimate) rather
    /// than a malformed input.
    pub fn is_undefined(&self) -> bool {
        !matches!(self, EstimatorError::Data(_) | EstimatorError::Multiplicity { .. })
    }
}

/// LR = 1 / relative frequency of the profile in the database.
pub fn woe_naive(db: &Database, x: &Haplotype) -> Result<WoeEstimate, EstimatorError> {
    let f = relative_frequency(db, x)?;
    if f == 0.0 {
        return Err(EstimatorError::ZeroFrequency);
    }
    let lr = 1.0 / f;
    Ok(WoeEstimate {
        method: Method::Naive,
        woe: lr.log10(),
        lr,
        diagnostics: Diagnostics::Naive {
            count: db.count(x)?,
            n: db.len(),
        },
    })
}
