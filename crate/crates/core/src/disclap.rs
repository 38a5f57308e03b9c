//! The discrete Laplace (two-sided geometric) distribution on the integers.
//!
//! `f(x | p, y) = (1 - p) / (1 + p) * p^|x - y|` with dispersion `p` in (0, 1)
//! and integer mode `y`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower clamp for the dispersion; the upper clamp is `1 - P_MIN`.
pub const P_MIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DomainError {
    #[error("dispersion {0} outside the open interval (0, 1)")]
    Dispersion(f64),
    #[error("mean absolute deviation {0} must be finite and non-negative")]
    Deviation(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaplace {
    p: f64,
    y: i64,
}

impl DiscreteLaplace {
    /// Validates `p` in (0, 1) and clamps it into `[P_MIN, 1 - P_MIN]`.
    pub fn new(p: f64, y: i64) -> Result<Self, DomainError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DomainError::Dispersion(p));
        }
        Ok(DiscreteLaplace {
            p: clamp_dispersion(p),
            y,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn y(&self) -> i64 {
        self.y
    }

    fn ln_norm(&self) -> f64 {
        ((1.0 - self.p) / (1.0 + self.p)).ln()
    }

    pub fn pmf(&self, x: i64) -> f64 {
        let d = (x - self.y).unsigned_abs();
        (1.0 - self.p) / (1.0 + self.p) * self.p.powf(d as f64)
    }

    pub fn ln_pmf(&self, x: i64) -> f64 {
        let d = (x - self.y).unsigned_abs();
        self.ln_norm() + d as f64 * self.p.ln()
    }

    /// Draws `y + S * G`: `G = 0` with probability `(1 - p) / (1 + p)`, otherwise
    /// `G >= 1` is geometric with ratio `p` and the sign `S` is a fair coin.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.gen();
        if u < (1.0 - self.p) / (1.0 + self.p) {
            return self.y;
        }
        // P(G = k | G >= 1) = (1 - p) p^(k-1); inverse CDF on (0, 1].
        let v: f64 = 1.0 - rng.gen::<f64>();
        let g = 1 + (v.ln() / self.p.ln()).floor() as i64;
        if rng.gen::<bool>() {
            self.y + g
        } else {
            self.y - g
        }
    }
}

fn clamp_dispersion(p: f64) -> f64 {
    p.clamp(P_MIN, 1.0 - P_MIN)
}

/// Expected `|X - y|` under dispersion `p`: `2p / (1 - p^2)`.
pub fn mean_abs_deviation(p: f64) -> Result<f64, DomainError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DomainError::Dispersion(p));
    }
    Ok(2.0 * p / (1.0 - p * p))
}

/// Maximum-likelihood dispersion for an observed mean absolute deviation `m`
/// around a fixed mode: the root in (0, 1) of `m (1 - p^2) = 2p`, clamped.
pub fn mle_dispersion(m: f64) -> Result<f64, DomainError> {
    if !(m.is_finite() && m >= 0.0) {
        return Err(DomainError::Deviation(m));
    }
    if m == 0.0 {
        return Ok(P_MIN);
    }
    // (sqrt(1 + m^2) - 1) / m rewritten as m / (sqrt(1 + m^2) + 1) to avoid
    // cancellation for small m.
    let p = m / ((1.0 + m * m).sqrt() + 1.0);
    Ok(clamp_dispersion(p))
}
