//! Distribution summaries in the Min / 1st Qu. / Median / Mean / 3rd Qu. /
//! Max / s.d. layout, and boxplot data.
//!
//! Quartiles use linear interpolation at rank `(n - 1) q` of the sorted values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("cannot summarize an empty list")]
    Empty,
    #[error("cannot summarize NaN values")]
    NaN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    /// Sample standard deviation (divisor `n - 1`); `None` for a single value.
    pub sd: Option<f64>,
    pub n_effective: usize,
    pub n_excluded: usize,
}

impl SummaryStats {
    pub fn with_excluded(mut self, n_excluded: usize) -> Self {
        self.n_excluded = n_excluded;
        self
    }
}

fn sorted(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(StatsError::NaN);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Linear-interpolation quantile of already sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats, StatsError> {
    let v = sorted(values)?;
    let n = v.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Ok(SummaryStats {
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        mean,
        q3: quantile_sorted(&v, 0.75),
        max: v[n - 1],
        sd,
        n_effective: n,
        n_excluded: 0,
    })
}

/// Five-number box with whiskers at the most extreme points within 1.5 IQR
/// of the quartiles; everything beyond is an outlier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotData {
    pub low_whisker: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub high_whisker: f64,
    pub outliers: Vec<f64>,
}

pub fn boxplot_data(values: &[f64]) -> Result<BoxplotData, StatsError> {
    let v = sorted(values)?;
    let q1 = quantile_sorted(&v, 0.25);
    let q3 = quantile_sorted(&v, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = |x: &&f64| **x >= lo_fence && **x <= hi_fence;
    let low_whisker = *v.iter().find(inside).expect("quartiles lie inside the fences");
    let high_whisker = *v.iter().rev().find(inside).expect("quartiles lie inside the fences");
    Ok(BoxplotData {
        low_whisker,
        q1,
        median: quantile_sorted(&v, 0.5),
        q3,
        high_whisker,
        outliers: v.iter().copied().filter(|x| !inside(&x)).collect(),
    })
}
