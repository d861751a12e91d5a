//! Item-level analysis: facility, variance, discrimination, and flags.

use serde::Serialize;

use crate::data::{ScoredTest, TestType};
use crate::error::{Error, Result};
use crate::stats::{mean, pearson, sample_variance};

/// Variance floors below which an item is a deletion candidate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ItemThresholds {
    /// Applied to knowledge items (0/1 scored).
    pub low_variance_knowledge: f64,
    /// Applied to person-scale items.
    pub low_variance_likert: f64,
}

impl Default for ItemThresholds {
    fn default() -> Self {
        ItemThresholds {
            low_variance_knowledge: 0.05,
            low_variance_likert: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemFlag {
    /// Variance below the configured floor; the item barely differentiates.
    LowVariance,
    /// Item-rest correlation is zero or negative.
    NonpositiveDiscrimination,
}

/// Per-item statistics for reporting.
#[derive(Debug, Clone, Serialize)]
pub struct ItemStats {
    pub id: String,
    pub facility: f64,
    pub variance: f64,
    /// Item-total correlation; `None` when the item (or total) is constant.
    pub discrimination: Option<f64>,
    /// Item-rest correlation (item removed from the total).
    pub corrected_discrimination: Option<f64>,
    pub flags: Vec<ItemFlag>,
}

/// Mean of the scored column: proportion correct for knowledge items,
/// mean endorsement for person scales.
pub fn item_facility(scored: &ScoredTest, item: usize) -> f64 {
    mean(&scored.column(item))
}

/// Item variance. Knowledge items use the closed form
/// `facility * (1 - facility)`, which peaks at 0.25 when facility is 0.5;
/// person scales use the n-1 sample variance.
pub fn item_variance(scored: &ScoredTest, item: usize) -> f64 {
    match scored.test_type {
        TestType::Knowledge => {
            let f = item_facility(scored, item);
            f * (1.0 - f)
        }
        TestType::Person => sample_variance(&scored.column(item)),
    }
}

/// Correlation between the item and the total score.
///
/// With `corrected` the item is removed from the total first (item-rest
/// correlation), so the item's own variance cannot inflate the estimate.
/// Reverse-keying an item leaves its rest score untouched and negates the
/// column, so its corrected discrimination flips sign exactly.
pub fn item_discrimination(scored: &ScoredTest, item: usize, corrected: bool) -> Result<f64> {
    let col = scored.column(item);
    if col.iter().all(|&v| v == col[0]) {
        return Err(Error::ZeroVariance {
            context: format!("item '{}'", scored.items[item]),
        });
    }
    let composite = if corrected {
        scored.rest_scores(item)
    } else {
        scored.totals.clone()
    };
    if composite.iter().all(|&v| v == composite[0]) {
        return Err(Error::ZeroVariance {
            context: if corrected {
                format!("rest score for item '{}'", scored.items[item])
            } else {
                "total score".to_string()
            },
        });
    }
    pearson(&col, &composite)
}

/// Full per-item table. Items whose discrimination is undefined (constant
/// column or constant composite) get `None` there instead of failing the
/// whole report; the low-variance flag marks them anyway.
pub fn item_report(scored: &ScoredTest, thresholds: &ItemThresholds) -> Result<Vec<ItemStats>> {
    if scored.n_participants() < 3 {
        return Err(Error::InsufficientData {
            context: "item analysis".to_string(),
            needed: 3,
            got: scored.n_participants(),
            unit: "participants",
        });
    }
    let floor = match scored.test_type {
        TestType::Knowledge => thresholds.low_variance_knowledge,
        TestType::Person => thresholds.low_variance_likert,
    };
    let mut out = Vec::with_capacity(scored.n_items());
    for j in 0..scored.n_items() {
        let facility = item_facility(scored, j);
        let variance = item_variance(scored, j);
        let discrimination = item_discrimination(scored, j, false).ok();
        let corrected = item_discrimination(scored, j, true).ok();
        let mut flags = Vec::new();
        if variance < floor {
            flags.push(ItemFlag::LowVariance);
        }
        if corrected.is_some_and(|d| d <= 0.0) {
            flags.push(ItemFlag::NonpositiveDiscrimination);
        }
        out.push(ItemStats {
            id: scored.items[j].clone(),
            facility,
            variance,
            discrimination,
            corrected_discrimination: corrected,
            flags,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_csv_reader, score, ScaleSpec};
    use ndarray::Array2;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn knowledge_scored(cols: &[Vec<f64>]) -> ScoredTest {
        // Build a knowledge test whose key is 1, so raw 1 scores to 1.
        let n = cols[0].len();
        let items: Vec<String> = (0..cols.len()).map(|j| format!("q{}", j + 1)).collect();
        let mut csv = items.join(",");
        csv.push('\n');
        for i in 0..n {
            let row: Vec<String> = cols.iter().map(|c| c[i].to_string()).collect();
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        let key: BTreeMap<String, f64> = items.iter().map(|it| (it.clone(), 1.0)).collect();
        let spec = ScaleSpec::knowledge(0.0, 1.0, key);
        let m = load_csv_reader(csv.as_bytes(), &spec).unwrap();
        score(&m, &spec).unwrap()
    }

    #[test]
    fn knowledge_variance_closed_form() {
        let scored = knowledge_scored(&[
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0, 1.0],
        ]);
        // Facility 0.5 gives the maximum variance 0.25.
        assert_eq!(item_facility(&scored, 0), 0.5);
        assert_eq!(item_variance(&scored, 0), 0.25);
        // Facility 0.25 gives 0.1875.
        assert_eq!(item_variance(&scored, 1), 0.1875);
        // A solved-by-everyone item has zero variance.
        assert_eq!(item_variance(&scored, 2), 0.0);
    }

    #[test]
    fn person_variance_is_sample_variance() {
        let scores = Array2::from_shape_vec((5, 1), vec![4.5, 4.5, 5.1, 5.1, 4.8]).unwrap();
        let scored = ScoredTest::from_columns(vec!["q1".into()], scores).unwrap();
        assert!((item_facility(&scored, 0) - 4.8).abs() < 1e-12);
        assert!((item_variance(&scored, 0) - 0.09).abs() < 1e-12);
    }

    #[test]
    fn high_endorsement_low_variance_item_is_flagged() {
        // Mean 4.8 with variance 0.09 on a 0-5 scale: deletion candidate.
        let scores = Array2::from_shape_vec(
            (5, 2),
            vec![
                4.5, 1.0, //
                4.5, 3.0, //
                5.1, 0.0, //
                5.1, 5.0, //
                4.8, 2.0,
            ],
        )
        .unwrap();
        let scored = ScoredTest::from_columns(vec!["q1".into(), "q2".into()], scores).unwrap();
        let report = item_report(&scored, &ItemThresholds::default()).unwrap();
        assert!(report[0].flags.contains(&ItemFlag::LowVariance));
        assert!(!report[1].flags.contains(&ItemFlag::LowVariance));
    }

    #[test]
    fn corrected_discrimination_flips_sign_exactly_under_reverse_keying() {
        // Sums of each column are divisible by n so the two-pass means stay
        // exact in floating point and the flip is bit-for-bit.
        let plain = ScaleSpec::person(0.0, 5.0);
        let reversed = ScaleSpec {
            reverse_keyed: vec!["q1".to_string()],
            ..ScaleSpec::person(0.0, 5.0)
        };
        let csv = "q1,q2,q3\n1,0,5\n2,2,1\n3,4,0\n";
        let m = load_csv_reader(csv.as_bytes(), &plain).unwrap();
        let fwd = score(&m, &plain).unwrap();
        let rev = score(&m, &reversed).unwrap();
        // Rest scores for q1 are identical in both scorings.
        assert_eq!(fwd.rest_scores(0), rev.rest_scores(0));
        let d_fwd = item_discrimination(&fwd, 0, true).unwrap();
        let d_rev = item_discrimination(&rev, 0, true).unwrap();
        assert_eq!(d_rev, -d_fwd);
        assert_eq!(d_fwd, -0.5);

        // Uncorrected flip, holding the composite fixed at the original total.
        let r_fwd = pearson(&fwd.column(0), &fwd.totals).unwrap();
        let r_rev = pearson(&rev.column(0), &fwd.totals).unwrap();
        assert_eq!(r_rev, -r_fwd);
    }

    #[test]
    fn discrimination_error_names_constant_item() {
        let scores =
            Array2::from_shape_vec((4, 2), vec![3.0, 1.0, 3.0, 2.0, 3.0, 4.0, 3.0, 0.0]).unwrap();
        let scored = ScoredTest::from_columns(vec!["flat".into(), "q2".into()], scores).unwrap();
        let err = item_discrimination(&scored, 0, false).unwrap_err();
        assert!(err.to_string().contains("flat"));
        // The report degrades to None instead of failing.
        let report = item_report(&scored, &ItemThresholds::default()).unwrap();
        assert_eq!(report[0].discrimination, None);
        assert!(report[0].flags.contains(&ItemFlag::LowVariance));
    }

    #[test]
    fn single_item_test_has_no_rest_score() {
        let scores = Array2::from_shape_vec((4, 1), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let scored = ScoredTest::from_columns(vec!["q1".into()], scores).unwrap();
        let err = item_discrimination(&scored, 0, true).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance { .. }));
    }

    proptest! {
        // Knowledge-item variance always satisfies the closed form and its
        // 0.25 ceiling, regardless of the response pattern.
        #[test]
        fn knowledge_variance_bound(pattern in proptest::collection::vec(0u8..=1, 4..40)) {
            let col: Vec<f64> = pattern.iter().map(|&v| v as f64).collect();
            let other: Vec<f64> = pattern.iter().enumerate()
                .map(|(i, _)| (i % 2) as f64)
                .collect();
            let scored = knowledge_scored(&[col.clone(), other]);
            let f = item_facility(&scored, 0);
            let v = item_variance(&scored, 0);
            prop_assert_eq!(v, f * (1.0 - f));
            prop_assert!(v <= 0.25);
        }
    }
}
