//! Criterion-related validity checks: predictive, concurrent, and
//! differential (convergent against discriminant) validity.

use serde::Serialize;

use crate::error::Result;
use crate::stats::CorrelationMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidityKind {
    Predictive,
    Concurrent,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub kind: ValidityKind,
    pub correlation: f64,
    pub n: usize,
    pub method: CorrelationMethod,
    /// Advisory flag, predictive only: strictly `r > 0.5`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meets_threshold: Option<bool>,
}

/// Correlation between test scores and a criterion measured later. The
/// advisory threshold flag is strict: exactly `r > 0.5`.
pub fn predictive_validity(
    test_scores: &[f64],
    criterion_scores: &[f64],
    method: CorrelationMethod,
) -> Result<ValidityReport> {
    let r = method.correlate(test_scores, criterion_scores)?;
    Ok(ValidityReport {
        kind: ValidityKind::Predictive,
        correlation: r,
        n: test_scores.len(),
        method,
        meets_threshold: Some(r > 0.5),
    })
}

/// Correlation between a new instrument and an existing instrument
/// administered to the same participants.
pub fn concurrent_validity(
    new_test: &[f64],
    existing_test: &[f64],
    method: CorrelationMethod,
) -> Result<ValidityReport> {
    let r = method.correlate(new_test, existing_test)?;
    Ok(ValidityReport {
        kind: ValidityKind::Concurrent,
        correlation: r,
        n: new_test.len(),
        method,
        meets_threshold: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DifferentialValidity {
    /// Correlation with the measure the test should agree with.
    pub convergent: f64,
    /// Correlation with the measure the test should not agree with.
    pub discriminant: f64,
    /// `convergent - discriminant`.
    pub discrepancy: f64,
    /// Set when the discrepancy is not positive: the test tracks the
    /// unrelated construct at least as strongly as the related one.
    pub concern: bool,
    pub n: usize,
    pub method: CorrelationMethod,
}

/// Convergent and discriminant correlations of the same test, and their
/// discrepancy. No significance test is attached; the discrepancy is
/// reported as a plain difference.
pub fn differential_validity(
    test_scores: &[f64],
    convergent_measure: &[f64],
    discriminant_measure: &[f64],
    method: CorrelationMethod,
) -> Result<DifferentialValidity> {
    let convergent = method.correlate(test_scores, convergent_measure)?;
    let discriminant = method.correlate(test_scores, discriminant_measure)?;
    let discrepancy = convergent - discriminant;
    Ok(DifferentialValidity {
        convergent,
        discriminant,
        discrepancy,
        concern: discrepancy <= 0.0,
        n: test_scores.len(),
        method,
    })
}
