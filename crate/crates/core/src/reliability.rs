//! Reliability coefficients: stability across administrations, internal
//! consistency, inter-rater agreement, and the standard error of
//! measurement.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::ScoredTest;
use crate::error::{Error, Result};
use crate::stats::{pearson, sample_sd, sample_variance, CorrelationMethod};

/// Correlation of paired totals across two administrations.
#[derive(Debug, Clone, Serialize)]
pub struct TestRetest {
    /// Reported coefficient; negative raw correlations are floored at 0.
    pub value: f64,
    /// Raw correlation before flooring.
    pub raw: f64,
    pub n_pairs: usize,
    pub method: CorrelationMethod,
}

/// Correlate total scores of the same participants across two scored
/// administrations, aligning rows by participant id.
///
/// A negative correlation is reported as 0, with the raw value preserved;
/// no other coefficient in this module floors its value. Participants
/// present in only one administration are an error that lists the ids.
pub fn test_retest(
    first: &ScoredTest,
    second: &ScoredTest,
    method: CorrelationMethod,
) -> Result<TestRetest> {
    let index_second: BTreeMap<&str, usize> = second
        .participants
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let missing_right: Vec<String> = first
        .participants
        .iter()
        .filter(|id| !index_second.contains_key(id.as_str()))
        .cloned()
        .collect();
    let index_first: BTreeMap<&str, usize> = first
        .participants
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let missing_left: Vec<String> = second
        .participants
        .iter()
        .filter(|id| !index_first.contains_key(id.as_str()))
        .cloned()
        .collect();
    if !missing_right.is_empty() || !missing_left.is_empty() {
        return Err(Error::Misaligned {
            missing_right,
            missing_left,
        });
    }

    let paired: Vec<(f64, f64)> = first
        .participants
        .iter()
        .enumerate()
        .map(|(i, id)| (first.totals[i], second.totals[index_second[id.as_str()]]))
        .collect();
    let x: Vec<f64> = paired.iter().map(|p| p.0).collect();
    let y: Vec<f64> = paired.iter().map(|p| p.1).collect();
    let raw = method.correlate(&x, &y)?;
    Ok(TestRetest {
        value: raw.max(0.0),
        raw,
        n_pairs: x.len(),
        method,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitHalf {
    /// Correlation between the two half totals.
    pub half_correlation: f64,
    /// Full-length reliability after the Spearman-Brown step-up.
    pub value: f64,
    pub odd_items: Vec<String>,
    pub even_items: Vec<String>,
}

/// Split-half reliability with an odd/even item split (1st, 3rd, ... against
/// 2nd, 4th, ...), stepped up to full length with the Spearman-Brown
/// formula.
pub fn split_half(scored: &ScoredTest) -> Result<SplitHalf> {
    if scored.n_items() < 2 {
        return Err(Error::InsufficientData {
            context: "split-half reliability".to_string(),
            needed: 2,
            got: scored.n_items(),
            unit: "items",
        });
    }
    let n = scored.n_participants();
    let mut odd_total = vec![0.0; n];
    let mut even_total = vec![0.0; n];
    let mut odd_items = Vec::new();
    let mut even_items = Vec::new();
    for (j, item) in scored.items.iter().enumerate() {
        let (total, names) = if j % 2 == 0 {
            (&mut odd_total, &mut odd_items)
        } else {
            (&mut even_total, &mut even_items)
        };
        names.push(item.clone());
        for (i, t) in total.iter_mut().enumerate() {
            *t += scored.scores[[i, j]];
        }
    }
    let half_correlation = pearson(&odd_total, &even_total).map_err(|e| match e {
        Error::ZeroVariance { .. } => Error::ZeroVariance {
            context: "a split half's total scores".to_string(),
        },
        other => other,
    })?;
    Ok(SplitHalf {
        half_correlation,
        value: spearman_brown(half_correlation)?,
        odd_items,
        even_items,
    })
}

/// Full-length Spearman-Brown step-up, `2r / (1 + r)`.
pub fn spearman_brown(r_half: f64) -> Result<f64> {
    if !r_half.is_finite() || r_half <= -1.0 || r_half > 1.0 {
        return Err(Error::InvalidParam {
            param: "r_half".to_string(),
            message: format!("half-test correlation must lie in (-1, 1], got {r_half}"),
        });
    }
    Ok(2.0 * r_half / (1.0 + r_half))
}

#[derive(Debug, Clone, Serialize)]
pub struct CronbachAlpha {
    pub value: f64,
    pub n_items: usize,
    pub n_participants: usize,
    /// Alpha recomputed with each item removed; only present with at least
    /// three items, since a single remaining item has no alpha.
    pub alpha_if_deleted: Option<Vec<ItemDeletedAlpha>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ItemDeletedAlpha {
    pub item: String,
    pub alpha: f64,
}

/// Cronbach's alpha, `k/(k-1) * (1 - sum(item variances)/variance(totals))`.
pub fn cronbach_alpha(scored: &ScoredTest) -> Result<CronbachAlpha> {
    let alpha = alpha_of_columns(scored, &(0..scored.n_items()).collect::<Vec<_>>())?;
    let alpha_if_deleted = if scored.n_items() >= 3 {
        let mut rows = Vec::with_capacity(scored.n_items());
        for drop in 0..scored.n_items() {
            let keep: Vec<usize> = (0..scored.n_items()).filter(|&j| j != drop).collect();
            rows.push(ItemDeletedAlpha {
                item: scored.items[drop].clone(),
                alpha: alpha_of_columns(scored, &keep)?,
            });
        }
        Some(rows)
    } else {
        None
    };
    Ok(CronbachAlpha {
        value: alpha,
        n_items: scored.n_items(),
        n_participants: scored.n_participants(),
        alpha_if_deleted,
    })
}

fn alpha_of_columns(scored: &ScoredTest, columns: &[usize]) -> Result<f64> {
    let k = columns.len();
    if k < 2 {
        return Err(Error::InsufficientData {
            context: "Cronbach's alpha".to_string(),
            needed: 2,
            got: k,
            unit: "items",
        });
    }
    let n = scored.n_participants();
    if n < 3 {
        return Err(Error::InsufficientData {
            context: "Cronbach's alpha".to_string(),
            needed: 3,
            got: n,
            unit: "participants",
        });
    }
    let mut item_var_sum = 0.0;
    let mut totals = vec![0.0; n];
    for &j in columns {
        let col = scored.column(j);
        item_var_sum += sample_variance(&col);
        for i in 0..n {
            totals[i] += col[i];
        }
    }
    let total_var = sample_variance(&totals);
    if total_var <= 0.0 {
        return Err(Error::ZeroVariance {
            context: "total scores".to_string(),
        });
    }
    Ok(k as f64 / (k as f64 - 1.0) * (1.0 - item_var_sum / total_var))
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaResult {
    pub value: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub n: usize,
}

/// Cohen's kappa for two raters over the same subjects,
/// `(p_o - p_e) / (1 - p_e)` with chance agreement from marginal products.
/// Ratings are categorical codes compared by exact equality.
pub fn cohen_kappa(first: &[f64], second: &[f64]) -> Result<KappaResult> {
    if first.len() != second.len() {
        return Err(Error::InvalidParam {
            param: "ratings".to_string(),
            message: format!(
                "rating vectors differ in length: {} vs {}",
                first.len(),
                second.len()
            ),
        });
    }
    let n = first.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            context: "Cohen's kappa".to_string(),
            needed: 2,
            got: n,
            unit: "subjects",
        });
    }
    for v in first.iter().chain(second) {
        if !v.is_finite() {
            return Err(Error::InvalidParam {
                param: "ratings".to_string(),
                message: "ratings must be finite category codes".to_string(),
            });
        }
    }

    let categories = category_codes(&[first, second]);
    let observed = first.iter().zip(second).filter(|(a, b)| a == b).count() as f64 / n as f64;
    let mut expected = 0.0;
    for c in &categories {
        let p1 = first.iter().filter(|v| *v == c).count() as f64 / n as f64;
        let p2 = second.iter().filter(|v| *v == c).count() as f64 / n as f64;
        expected += p1 * p2;
    }
    if (1.0 - expected).abs() < 1e-12 {
        return Err(Error::DegenerateAgreement {
            context: "chance agreement is 1; both raters use a single identical category"
                .to_string(),
        });
    }
    Ok(KappaResult {
        value: (observed - expected) / (1.0 - expected),
        observed_agreement: observed,
        expected_agreement: expected,
        n,
    })
}

fn category_codes(groups: &[&[f64]]) -> Vec<f64> {
    let mut values: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    values
}

/// Fleiss' kappa for any number of raters.
///
/// `ratings` has one row per subject and one column per rater; entries are
/// categorical codes. All cells must be present.
pub fn fleiss_kappa(ratings: &Array2<f64>) -> Result<KappaResult> {
    let (n_subjects, n_raters) = ratings.dim();
    if n_raters < 2 {
        return Err(Error::InsufficientData {
            context: "Fleiss' kappa".to_string(),
            needed: 2,
            got: n_raters,
            unit: "raters",
        });
    }
    if n_subjects < 2 {
        return Err(Error::InsufficientData {
            context: "Fleiss' kappa".to_string(),
            needed: 2,
            got: n_subjects,
            unit: "subjects",
        });
    }
    for v in ratings.iter() {
        if !v.is_finite() {
            return Err(Error::InvalidParam {
                param: "ratings".to_string(),
                message: "ratings must be finite category codes".to_string(),
            });
        }
    }
    let rows: Vec<&[f64]> = ratings
        .rows()
        .into_iter()
        .map(|r| r.to_slice().expect("standard layout"))
        .collect();
    let categories = category_codes(&rows.iter().map(|r| &**r).collect::<Vec<_>>());

    let m = n_raters as f64;
    let mut category_totals = vec![0.0; categories.len()];
    let mut agreement_sum = 0.0;
    for row in &rows {
        let mut ssq = 0.0;
        for (ci, c) in categories.iter().enumerate() {
            let count = row.iter().filter(|v| *v == c).count() as f64;
            ssq += count * count;
            category_totals[ci] += count;
        }
        agreement_sum += (ssq - m) / (m * (m - 1.0));
    }
    let observed = agreement_sum / n_subjects as f64;
    let total = m * n_subjects as f64;
    let expected: f64 = category_totals.iter().map(|t| (t / total).powi(2)).sum();
    if (1.0 - expected).abs() < 1e-12 {
        return Err(Error::DegenerateAgreement {
            context: "chance agreement is 1; a single category is used everywhere".to_string(),
        });
    }
    Ok(KappaResult {
        value: (observed - expected) / (1.0 - expected),
        observed_agreement: observed,
        expected_agreement: expected,
        n: n_subjects,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgreementLevel {
    Nominal,
    Interval,
}

#[derive(Debug, Clone, Serialize)]
pub struct KrippendorffAlpha {
    pub value: f64,
    pub level: AgreementLevel,
    /// Pairable values across all units with at least two ratings.
    pub n_pairable: usize,
    /// Units skipped because they held fewer than two ratings.
    pub units_skipped: usize,
}

/// Krippendorff's alpha, `1 - D_o / D_e`, from a coincidence matrix over
/// pairable values.
///
/// `ratings` has one row per rater and one column per unit; `None` marks a
/// missing rating. Units with fewer than two ratings contribute nothing.
/// The nominal level uses identity disagreement, the interval level squared
/// differences.
pub fn krippendorff_alpha(
    ratings: &[Vec<Option<f64>>],
    level: AgreementLevel,
) -> Result<KrippendorffAlpha> {
    let n_units = ratings.first().map(|r| r.len()).unwrap_or(0);
    if ratings.len() < 2 {
        return Err(Error::InsufficientData {
            context: "Krippendorff's alpha".to_string(),
            needed: 2,
            got: ratings.len(),
            unit: "raters",
        });
    }
    for (i, row) in ratings.iter().enumerate() {
        if row.len() != n_units {
            return Err(Error::InvalidParam {
                param: "ratings".to_string(),
                message: format!(
                    "rater row {} has {} units, expected {n_units}",
                    i + 1,
                    row.len()
                ),
            });
        }
        for v in row.iter().flatten() {
            if !v.is_finite() {
                return Err(Error::InvalidParam {
                    param: "ratings".to_string(),
                    message: "ratings must be finite".to_string(),
                });
            }
        }
    }

    let mut values: Vec<f64> = ratings
        .iter()
        .flat_map(|r| r.iter().flatten().copied())
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    let index_of = |v: f64| values.iter().position(|&c| c == v).unwrap();

    let k = values.len();
    let mut coincidence = vec![vec![0.0f64; k]; k];
    let mut n_pairable = 0usize;
    let mut units_skipped = 0usize;
    for u in 0..n_units {
        let unit: Vec<f64> = ratings.iter().filter_map(|r| r[u]).collect();
        let m = unit.len();
        if m < 2 {
            units_skipped += 1;
            continue;
        }
        n_pairable += m;
        let weight = 1.0 / (m as f64 - 1.0);
        for a in 0..m {
            for b in 0..m {
                if a != b {
                    coincidence[index_of(unit[a])][index_of(unit[b])] += weight;
                }
            }
        }
    }
    if n_pairable < 2 {
        return Err(Error::InsufficientData {
            context: "Krippendorff's alpha (pairable values)".to_string(),
            needed: 2,
            got: n_pairable,
            unit: "ratings",
        });
    }

    let delta = |a: usize, b: usize| -> f64 {
        match level {
            AgreementLevel::Nominal => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            AgreementLevel::Interval => (values[a] - values[b]).powi(2),
        }
    };
    let totals: Vec<f64> = (0..k)
        .map(|a| (0..k).map(|b| coincidence[a][b]).sum())
        .collect();
    let n_total: f64 = totals.iter().sum();
    let mut observed = 0.0;
    let mut expected = 0.0;
    for a in 0..k {
        for b in 0..k {
            observed += coincidence[a][b] * delta(a, b);
            expected += totals[a] * totals[b] * delta(a, b);
        }
    }
    observed /= n_total;
    expected /= n_total * (n_total - 1.0);
    if expected <= 0.0 {
        return Err(Error::DegenerateAgreement {
            context: "expected disagreement is 0; all pairable ratings are identical".to_string(),
        });
    }
    Ok(KrippendorffAlpha {
        value: 1.0 - observed / expected,
        level,
        n_pairable,
        units_skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemForm {
    /// `sd * sqrt(1 - r)`; satisfies sem(r=0) = sd and sem(r=1) = 0.
    Conventional,
    /// `variance * (1 - r)`; an alternative definition that substitutes the
    /// variance for the standard deviation. Selectable for comparability,
    /// not the default.
    VarianceBased,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sem {
    pub value: f64,
    /// Half-width of the 95% confidence band, `1.96 * sem`.
    pub ci_half_width: f64,
    pub form: SemForm,
    pub reliability: f64,
}

/// Standard error of measurement of the total score at a given reliability.
pub fn sem(scored: &ScoredTest, reliability: f64, form: SemForm) -> Result<Sem> {
    if !(0.0..=1.0).contains(&reliability) {
        return Err(Error::InvalidParam {
            param: "reliability".to_string(),
            message: format!("must lie in [0, 1], got {reliability}"),
        });
    }
    let sd = sample_sd(&scored.totals);
    if !sd.is_finite() || sd <= 0.0 {
        return Err(Error::ZeroVariance {
            context: "total scores".to_string(),
        });
    }
    let value = match form {
        SemForm::Conventional => sd * (1.0 - reliability).sqrt(),
        SemForm::VarianceBased => sd * sd * (1.0 - reliability),
    };
    Ok(Sem {
        value,
        ci_half_width: 1.96 * value,
        form,
        reliability,
    })
}

/// 95% confidence interval around an observed score.
pub fn score_interval(score: f64, sem: &Sem) -> (f64, f64) {
    (score - sem.ci_half_width, score + sem.ci_half_width)
}
