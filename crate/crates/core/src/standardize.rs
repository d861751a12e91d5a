//! Score standardization: z and T scores, stanine and sten bands, and
//! normalizing transforms for skewed raw scores.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{mean, sample_sd};

/// Reference distribution (norm) against which raw scores are standardized.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormReference {
    mean: f64,
    sd: f64,
}

impl NormReference {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !sd.is_finite() || sd <= 0.0 || !mean.is_finite() {
            return Err(Error::DegenerateNorm { sd });
        }
        Ok(NormReference { mean, sd })
    }

    /// Norm estimated from a sample (n-1 standard deviation).
    pub fn from_sample(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData {
                context: "norm estimation".to_string(),
                needed: 2,
                got: values.len(),
                unit: "observations",
            });
        }
        Self::new(mean(values), sample_sd(values))
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }
}

/// Standard score `(x - mean) / sd`.
pub fn z_score(x: f64, norm: &NormReference) -> f64 {
    (x - norm.mean) / norm.sd
}

/// T score `10z + 50`.
pub fn t_score(x: f64, norm: &NormReference) -> f64 {
    z_score(x, norm) * 10.0 + 50.0
}

// Band lower edges; each band is inclusive of its lower edge and exclusive
// of the next one, with open tails on both ends.
const STANINE_EDGES: [f64; 8] = [-1.75, -1.25, -0.75, -0.25, 0.25, 0.75, 1.25, 1.75];
const STEN_EDGES: [f64; 9] = [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0];

/// Nine-band standard score over z, from 1 (z < -1.75) to 9 (z >= 1.75).
pub fn stanine(z: f64) -> u8 {
    1 + STANINE_EDGES.iter().filter(|e| z >= **e).count() as u8
}

/// Ten-band standard score over z, from 1 (z < -2.0) to 10 (z >= 2.0).
pub fn sten(z: f64) -> u8 {
    1 + STEN_EDGES.iter().filter(|e| z >= **e).count() as u8
}

/// Distribution-normalizing transforms applied before standardization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeTransform {
    /// Natural log; requires strictly positive values.
    Log,
    /// Square root; requires non-negative values.
    Sqrt,
}

/// Apply a normalizing transform, rejecting out-of-domain values by name.
pub fn normalize(values: &[f64], transform: NormalizeTransform) -> Result<Vec<f64>> {
    match transform {
        NormalizeTransform::Log => {
            if let Some(bad) = values.iter().find(|v| **v <= 0.0) {
                return Err(Error::Domain {
                    transform: "log".to_string(),
                    value: *bad,
                });
            }
            Ok(values.iter().map(|v| v.ln()).collect())
        }
        NormalizeTransform::Sqrt => {
            if let Some(bad) = values.iter().find(|v| **v < 0.0) {
                return Err(Error::Domain {
                    transform: "sqrt".to_string(),
                    value: *bad,
                });
            }
            Ok(values.iter().map(|v| v.sqrt()).collect())
        }
    }
}
