//! Item-bias screening: facility comparison by group, Mantel-Haenszel and
//! logistic-regression differential item functioning, and a test-level
//! summary.

use ndarray::Array2;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::ScoredTest;
use crate::error::{Error, Result};
use crate::stats::{logistic_fit, percentile_linear};

#[derive(Debug, Clone, Serialize)]
pub struct GroupValue {
    pub group: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupFacilityRow {
    pub item: String,
    pub facilities: Vec<GroupValue>,
    /// Largest pairwise facility difference across groups.
    pub max_difference: f64,
}

/// Mean item score per group, with the largest pairwise difference per
/// item. Requires at least two groups.
pub fn facility_by_group(scored: &ScoredTest) -> Result<Vec<GroupFacilityRow>> {
    let groups = scored.groups.as_ref().ok_or_else(|| Error::InvalidParam {
        param: "groups".to_string(),
        message: "facility comparison requires a group column".to_string(),
    })?;
    let levels = sorted_levels(groups);
    if levels.len() < 2 {
        return Err(Error::InsufficientData {
            context: "facility comparison by group".to_string(),
            needed: 2,
            got: levels.len(),
            unit: "groups",
        });
    }
    let mut rows = Vec::with_capacity(scored.n_items());
    for (j, item) in scored.items.iter().enumerate() {
        let mut facilities = Vec::with_capacity(levels.len());
        for level in &levels {
            let values: Vec<f64> = groups
                .iter()
                .enumerate()
                .filter(|(_, g)| *g == level)
                .map(|(i, _)| scored.scores[[i, j]])
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            facilities.push(GroupValue {
                group: level.clone(),
                value: mean,
            });
        }
        let mut max_difference = 0.0f64;
        for a in 0..facilities.len() {
            for b in (a + 1)..facilities.len() {
                max_difference =
                    max_difference.max((facilities[a].value - facilities[b].value).abs());
            }
        }
        rows.push(GroupFacilityRow {
            item: item.clone(),
            facilities,
            max_difference,
        });
    }
    Ok(rows)
}

/// Distinct group labels in lexicographic order. The first label is the
/// reference group for DIF contrasts. Ordering by label rather than by row
/// position makes results independent of row order, and guarantees that
/// swapping the two labels member-wise maps the odds ratio to its exact
/// reciprocal.
fn sorted_levels(groups: &[String]) -> Vec<String> {
    let mut levels: Vec<String> = Vec::new();
    for g in groups {
        if !levels.contains(g) {
            levels.push(g.clone());
        }
    }
    levels.sort();
    levels
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DifMethod {
    Mh,
    LogisticUniform,
    LogisticNonuniform,
}

#[derive(Debug, Clone, Serialize)]
pub struct DifResult {
    pub item: String,
    pub method: DifMethod,
    pub statistic: f64,
    pub p_value: f64,
    /// Common odds ratio for MH (odds of a correct response in the
    /// reference group relative to the focal group); added coefficient for
    /// the logistic tests.
    pub effect: f64,
    pub flagged: bool,
    pub alpha: f64,
    pub reference: String,
    pub focal: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strata_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strata_dropped: Option<usize>,
}

fn binary_groups(scored: &ScoredTest) -> Result<(String, String, Vec<bool>)> {
    let groups = scored.groups.as_ref().ok_or_else(|| Error::InvalidParam {
        param: "groups".to_string(),
        message: "DIF analysis requires a group column".to_string(),
    })?;
    let levels = sorted_levels(groups);
    if levels.len() != 2 {
        return Err(Error::InvalidParam {
            param: "groups".to_string(),
            message: format!(
                "DIF analysis requires exactly 2 group levels, found {}: {}",
                levels.len(),
                levels.join(", ")
            ),
        });
    }
    let focal_mask = groups.iter().map(|g| *g == levels[1]).collect();
    Ok((levels[0].clone(), levels[1].clone(), focal_mask))
}

fn dichotomous_column(scored: &ScoredTest, item: &str) -> Result<(usize, Vec<f64>)> {
    let j = scored.item_index(item)?;
    let col = scored.column(j);
    if col.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::NotDichotomous {
            item: item.to_string(),
        });
    }
    Ok((j, col))
}

fn chi_square_1df_p(statistic: f64) -> f64 {
    ChiSquared::new(1.0).expect("df 1 is valid").sf(statistic)
}

/// One stratum's 2x2 table: reference correct/incorrect, focal
/// correct/incorrect.
#[derive(Debug, Clone, Copy, Default)]
struct StratumTable {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl StratumTable {
    fn total(&self) -> f64 {
        self.a + self.b + self.c + self.d
    }

    /// True when a row or column margin is zero, making the stratum
    /// uninformative.
    fn degenerate(&self) -> bool {
        self.a + self.b == 0.0
            || self.c + self.d == 0.0
            || self.a + self.c == 0.0
            || self.b + self.d == 0.0
    }
}

/// Mantel-Haenszel common odds ratio and continuity-corrected chi-square
/// over informative strata.
fn mh_from_tables(tables: &[StratumTable]) -> Result<(f64, f64, usize, usize)> {
    let mut sum_ad = 0.0;
    let mut sum_bc = 0.0;
    let mut sum_a = 0.0;
    let mut sum_expected = 0.0;
    let mut sum_variance = 0.0;
    let mut used = 0usize;
    let mut dropped = 0usize;
    for t in tables {
        if t.degenerate() {
            dropped += 1;
            continue;
        }
        used += 1;
        let n = t.total();
        sum_ad += t.a * t.d / n;
        sum_bc += t.b * t.c / n;
        sum_a += t.a;
        let row1 = t.a + t.b;
        let row0 = t.c + t.d;
        let col1 = t.a + t.c;
        let col0 = t.b + t.d;
        sum_expected += row1 * col1 / n;
        sum_variance += row1 * row0 * col1 * col0 / (n * n * (n - 1.0));
    }
    if used == 0 {
        return Err(Error::NoUsableStrata {
            item: String::new(),
        });
    }
    if sum_ad == 0.0 || sum_bc == 0.0 || sum_variance == 0.0 {
        return Err(Error::DegenerateAgreement {
            context: "every informative stratum is one-sided; the common odds ratio is unbounded"
                .to_string(),
        });
    }
    let odds_ratio = sum_ad / sum_bc;
    let correction = ((sum_a - sum_expected).abs() - 0.5).max(0.0);
    let statistic = correction * correction / sum_variance;
    Ok((odds_ratio, statistic, used, dropped))
}

/// Mantel-Haenszel DIF for one dichotomous item.
///
/// Participants are stratified by banding the rest score (total minus the
/// studied item, so the item cannot contaminate its own matching) into
/// `n_strata` pooled quantile bins. Strata with a zero margin are dropped
/// and counted. The statistic uses the 0.5 continuity correction and is
/// referred to a 1-df chi-square distribution.
pub fn mantel_haenszel_dif(
    scored: &ScoredTest,
    item: &str,
    n_strata: usize,
    alpha: f64,
) -> Result<DifResult> {
    if n_strata < 2 {
        return Err(Error::InvalidParam {
            param: "n_strata".to_string(),
            message: format!("at least 2 strata required, got {n_strata}"),
        });
    }
    check_alpha(alpha)?;
    let (reference, focal, focal_mask) = binary_groups(scored)?;
    let (j, responses) = dichotomous_column(scored, item)?;
    let rest = scored.rest_scores(j);

    // Pooled quantile edges; banding is lower-inclusive so ties at an edge
    // land in the upper stratum.
    let edges: Vec<f64> = (1..n_strata)
        .map(|k| percentile_linear(&rest, k as f64 / n_strata as f64))
        .collect();
    let mut tables = vec![StratumTable::default(); n_strata];
    for i in 0..scored.n_participants() {
        let stratum = edges.iter().filter(|e| rest[i] >= **e).count();
        let t = &mut tables[stratum];
        let correct = responses[i] == 1.0;
        match (focal_mask[i], correct) {
            (false, true) => t.a += 1.0,
            (false, false) => t.b += 1.0,
            (true, true) => t.c += 1.0,
            (true, false) => t.d += 1.0,
        }
    }

    let (odds_ratio, statistic, used, dropped) = mh_from_tables(&tables).map_err(|e| match e {
        Error::NoUsableStrata { .. } => Error::NoUsableStrata {
            item: item.to_string(),
        },
        other => other,
    })?;
    let p_value = chi_square_1df_p(statistic);
    Ok(DifResult {
        item: item.to_string(),
        method: DifMethod::Mh,
        statistic,
        p_value,
        effect: odds_ratio,
        flagged: p_value < alpha,
        alpha,
        reference,
        focal,
        strata_used: Some(used),
        strata_dropped: Some(dropped),
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParam {
            param: "alpha".to_string(),
            message: format!("significance level must lie in (0, 1), got {alpha}"),
        });
    }
    Ok(())
}

/// Logistic-regression DIF for one dichotomous item: likelihood-ratio tests
/// of nested models of the response on the rest score, plus a group main
/// effect (uniform DIF), plus a group-by-rest interaction (non-uniform
/// DIF). Each test has 1 df. The group indicator is 1 for the focal group.
pub fn logistic_dif(scored: &ScoredTest, item: &str, alpha: f64) -> Result<Vec<DifResult>> {
    check_alpha(alpha)?;
    let (reference, focal, focal_mask) = binary_groups(scored)?;
    let (j, responses) = dichotomous_column(scored, item)?;
    let rest = scored.rest_scores(j);
    let n = scored.n_participants();

    let base = Array2::from_shape_fn((n, 2), |(i, c)| match c {
        0 => 1.0,
        _ => rest[i],
    });
    let with_group = Array2::from_shape_fn((n, 3), |(i, c)| match c {
        0 => 1.0,
        1 => rest[i],
        _ => f64::from(focal_mask[i]),
    });
    let with_interaction = Array2::from_shape_fn((n, 4), |(i, c)| match c {
        0 => 1.0,
        1 => rest[i],
        2 => f64::from(focal_mask[i]),
        _ => f64::from(focal_mask[i]) * rest[i],
    });

    let name_item = |e: Error| match e {
        Error::Separation { context } => Error::Separation {
            context: format!("item {item}: {context}"),
        },
        other => other,
    };
    let fit_base = logistic_fit(&base, &responses).map_err(name_item)?;
    let fit_group = logistic_fit(&with_group, &responses).map_err(name_item)?;
    let fit_interaction = logistic_fit(&with_interaction, &responses).map_err(name_item)?;

    // Likelihood ratios can dip a hair below zero from convergence
    // tolerance; clamp at the boundary.
    let uniform_lr = (2.0 * (fit_group.log_likelihood - fit_base.log_likelihood)).max(0.0);
    let nonuniform_lr =
        (2.0 * (fit_interaction.log_likelihood - fit_group.log_likelihood)).max(0.0);
    let uniform_p = chi_square_1df_p(uniform_lr);
    let nonuniform_p = chi_square_1df_p(nonuniform_lr);

    Ok(vec![
        DifResult {
            item: item.to_string(),
            method: DifMethod::LogisticUniform,
            statistic: uniform_lr,
            p_value: uniform_p,
            effect: fit_group.coefficients[2],
            flagged: uniform_p < alpha,
            alpha,
            reference: reference.clone(),
            focal: focal.clone(),
            strata_used: None,
            strata_dropped: None,
        },
        DifResult {
            item: item.to_string(),
            method: DifMethod::LogisticNonuniform,
            statistic: nonuniform_lr,
            p_value: nonuniform_p,
            effect: fit_interaction.coefficients[3],
            flagged: nonuniform_p < alpha,
            alpha,
            reference,
            focal,
            strata_used: None,
            strata_dropped: None,
        },
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodCount {
    pub method: DifMethod,
    pub flagged: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DtfSummary {
    pub per_method: Vec<MethodCount>,
    /// Distinct items across all results.
    pub items_total: usize,
    /// Distinct items flagged by at least one method.
    pub items_flagged: usize,
    pub proportion_flagged: f64,
    pub threshold: f64,
    /// Differential test functioning warning: the flagged proportion
    /// exceeds the threshold.
    pub warning: bool,
}

/// Aggregate per-item DIF results into a test-level summary. The warning
/// fires when the proportion of flagged items exceeds `threshold`
/// (customarily 0.25); it never gates processing.
pub fn dtf_summary(results: &[DifResult], threshold: f64) -> DtfSummary {
    let mut per_method: Vec<MethodCount> = Vec::new();
    for r in results {
        match per_method.iter_mut().find(|m| m.method == r.method) {
            Some(m) => {
                m.total += 1;
                m.flagged += usize::from(r.flagged);
            }
            None => per_method.push(MethodCount {
                method: r.method,
                flagged: usize::from(r.flagged),
                total: 1,
            }),
        }
    }
    let mut items: Vec<&str> = Vec::new();
    let mut flagged_items: Vec<&str> = Vec::new();
    for r in results {
        if !items.contains(&r.item.as_str()) {
            items.push(&r.item);
        }
        if r.flagged && !flagged_items.contains(&r.item.as_str()) {
            flagged_items.push(&r.item);
        }
    }
    let proportion = if items.is_empty() {
        0.0
    } else {
        flagged_items.len() as f64 / items.len() as f64
    };
    DtfSummary {
        per_method,
        items_total: items.len(),
        items_flagged: flagged_items.len(),
        proportion_flagged: proportion,
        threshold,
        warning: proportion > threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{score, ScaleSpec};
    use crate::simulate::{generate_dif_data, DifKind, DifSimSpec, FactorModelSpec, LikertBins};
    use approx::assert_abs_diff_eq;

    /// Dichotomous scored test with groups from the DIF simulator.
    fn simulated_dif(
        kind: DifKind,
        magnitude: f64,
        n: usize,
        seed: u64,
        dif_items: Vec<usize>,
    ) -> ScoredTest {
        let base = FactorModelSpec {
            n,
            loadings: {
                let mut l = Array2::<f64>::zeros((8, 1));
                l.column_mut(0).fill(0.6);
                l
            },
            phi: Array2::eye(1),
            likert: Some(LikertBins { min: 0, max: 1 }),
            seed,
        };
        let spec = DifSimSpec {
            base,
            dif_items,
            kind,
            magnitude,
            reference_fraction: 0.5,
        };
        let data = generate_dif_data(&spec).unwrap();
        let spec = ScaleSpec::person(0.0, 1.0);
        let mut scored = score(&data.matrix, &spec).unwrap();
        // Relabel so the simulator's reference group sorts first and stays
        // the analysis reference.
        scored.groups = Some(
            scored
                .groups
                .unwrap()
                .iter()
                .map(|g| if g == "ref" { "a" } else { "b" }.to_string())
                .collect(),
        );
        scored
    }

    #[test]
    fn facility_by_group_identical_groups_show_zero_difference() {
        // Alternating group labels; both groups see the pattern (1, 0, 1)
        // on item 1 and (0, 1, 0) on item 2.
        let scores = ndarray::array![
            [1.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.0, 1.0],
            [1.0, 0.0],
            [1.0, 0.0],
        ];
        let mut scored = ScoredTest::from_columns_with_ids(
            (1..=6).map(|i| format!("p{i}")).collect(),
            vec!["q1".into(), "q2".into()],
            scores,
        )
        .unwrap();
        scored.groups = Some(
            (0..6)
                .map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string())
                .collect(),
        );
        let rows = facility_by_group(&scored).unwrap();
        for row in rows {
            assert_abs_diff_eq!(row.max_difference, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn facility_by_group_detects_a_shifted_item() {
        // Group a: 8 of 10 correct. Group b: 5 of 10 correct.
        let mut scores = Array2::<f64>::zeros((20, 1));
        for i in 0..8 {
            scores[[i, 0]] = 1.0;
        }
        for i in 10..15 {
            scores[[i, 0]] = 1.0;
        }
        let mut scored = ScoredTest::from_columns_with_ids(
            (1..=20).map(|i| format!("p{i}")).collect(),
            vec!["q1".into()],
            scores,
        )
        .unwrap();
        scored.groups = Some(
            (0..20)
                .map(|i| if i < 10 { "a" } else { "b" }.to_string())
                .collect(),
        );
        let rows = facility_by_group(&scored).unwrap();
        assert_abs_diff_eq!(rows[0].max_difference, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[0].facilities[0].value, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[0].facilities[1].value, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn facility_by_group_requires_two_groups() {
        let mut scored =
            ScoredTest::from_columns(vec!["q1".to_string()], ndarray::array![[1.0], [0.0], [1.0]])
                .unwrap();
        scored.groups = Some(vec!["only".into(); 3]);
        assert!(matches!(
            facility_by_group(&scored).unwrap_err(),
            Error::InsufficientData { .. }
        ));
        scored.groups = None;
        assert!(facility_by_group(&scored).is_err());
    }

    #[test]
    fn mh_two_stratum_hand_oracle() {
        // Stratum 1: a=30 b=10 c=20 d=20; stratum 2: a=20 b=20 c=10 d=30.
        // Each stratum: AD/T = 7.5, BC/T = 2.5, so OR = 15/5 = 3.
        // Sum A = 50, expected = 25 + 15 = 40, variances both
        // 40*40*50*30 / (6400 * 79); chi2 = (10 - 0.5)^2 / (2 * 4.746835...)
        // = 90.25 * 505600 / 4800000 = 9.5063333...
        let tables = vec![
            StratumTable {
                a: 30.0,
                b: 10.0,
                c: 20.0,
                d: 20.0,
            },
            StratumTable {
                a: 20.0,
                b: 20.0,
                c: 10.0,
                d: 30.0,
            },
        ];
        let (or, chi2, used, dropped) = mh_from_tables(&tables).unwrap();
        assert_abs_diff_eq!(or, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chi2, 9.506333333333333, epsilon = 1e-12);
        assert_eq!(used, 2);
        assert_eq!(dropped, 0);
    }

    #[test]
    fn mh_drops_degenerate_strata() {
        let tables = vec![
            StratumTable {
                a: 30.0,
                b: 10.0,
                c: 20.0,
                d: 20.0,
            },
            // All correct: zero incorrect margin.
            StratumTable {
                a: 10.0,
                b: 0.0,
                c: 12.0,
                d: 0.0,
            },
            // Focal group absent.
            StratumTable {
                a: 5.0,
                b: 5.0,
                c: 0.0,
                d: 0.0,
            },
        ];
        let (_, _, used, dropped) = mh_from_tables(&tables).unwrap();
        assert_eq!(used, 1);
        assert_eq!(dropped, 2);
    }

    #[test]
    fn mh_null_data_is_rarely_flagged() {
        let scored = simulated_dif(DifKind::Uniform, 0.0, 600, 101, vec![0]);
        let r = mantel_haenszel_dif(&scored, "q1", 5, 0.05).unwrap();
        assert!(!r.flagged, "null flagged with p = {}", r.p_value);
        assert!(r.effect > 0.6 && r.effect < 1.6, "OR = {}", r.effect);
        assert_eq!(r.strata_used.unwrap() + r.strata_dropped.unwrap(), 5);
    }

    #[test]
    fn mh_flags_simulated_uniform_dif() {
        let mut flagged = 0;
        for seed in 0..5 {
            let scored = simulated_dif(DifKind::Uniform, 0.8, 1000, 200 + seed, vec![0]);
            let r = mantel_haenszel_dif(&scored, "q1", 5, 0.05).unwrap();
            if r.flagged {
                flagged += 1;
            }
            // The simulator advantages the focal group on the DIF item, so
            // the reference group's relative odds of success drop below 1.
            assert!(r.effect < 1.0, "OR = {}", r.effect);
        }
        assert!(flagged >= 4, "flagged {flagged}/5 seeds");
    }

    #[test]
    fn mh_label_swap_inverts_odds_ratio() {
        let scored = simulated_dif(DifKind::Uniform, 0.6, 800, 77, vec![0]);
        let original = mantel_haenszel_dif(&scored, "q1", 5, 0.05).unwrap();
        // Swap the labels member-wise: the reference label "a" now names
        // the other group of participants.
        let mut swapped = scored.clone();
        swapped.groups = Some(
            scored
                .groups
                .as_ref()
                .unwrap()
                .iter()
                .map(|g| if g == "a" { "b" } else { "a" }.to_string())
                .collect(),
        );
        let inverted = mantel_haenszel_dif(&swapped, "q1", 5, 0.05).unwrap();
        assert_eq!(inverted.reference, "a");
        assert_abs_diff_eq!(original.effect * inverted.effect, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(original.p_value, inverted.p_value, epsilon = 1e-10);
    }

    #[test]
    fn mh_rejects_non_dichotomous_and_missing_groups() {
        let scored = simulated_dif(DifKind::Uniform, 0.0, 100, 1, vec![0]);
        let mut bad = scored.clone();
        bad.scores[[0, 0]] = 2.0;
        assert!(matches!(
            mantel_haenszel_dif(&bad, "q1", 5, 0.05).unwrap_err(),
            Error::NotDichotomous { .. }
        ));
        let mut no_groups = scored.clone();
        no_groups.groups = None;
        assert!(mantel_haenszel_dif(&no_groups, "q1", 5, 0.05).is_err());
        assert!(mantel_haenszel_dif(&scored, "q1", 1, 0.05).is_err());
        assert!(mantel_haenszel_dif(&scored, "q1", 5, 0.0).is_err());
    }

    #[test]
    fn mh_errors_when_every_stratum_is_one_sided() {
        // Everyone answers the item correctly.
        let mut scored = simulated_dif(DifKind::Uniform, 0.0, 60, 3, vec![0]);
        for i in 0..scored.n_participants() {
            scored.scores[[i, 0]] = 1.0;
        }
        match mantel_haenszel_dif(&scored, "q1", 5, 0.05).unwrap_err() {
            Error::NoUsableStrata { item } => assert_eq!(item, "q1"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn logistic_null_is_not_flagged() {
        let scored = simulated_dif(DifKind::Uniform, 0.0, 600, 55, vec![0]);
        let results = logistic_dif(&scored, "q1", 0.05).unwrap();
        assert_eq!(results.len(), 2);
        assert_eq!(results[0].method, DifMethod::LogisticUniform);
        assert_eq!(results[1].method, DifMethod::LogisticNonuniform);
        assert!(!results[0].flagged, "uniform p = {}", results[0].p_value);
        assert!(!results[1].flagged, "nonuniform p = {}", results[1].p_value);
    }

    #[test]
    fn logistic_flags_uniform_dif_as_uniform() {
        let mut uniform_hits = 0;
        let mut nonuniform_hits = 0;
        for seed in 0..5 {
            let scored = simulated_dif(DifKind::Uniform, 0.8, 1000, 300 + seed, vec![0]);
            let results = logistic_dif(&scored, "q1", 0.05).unwrap();
            uniform_hits += usize::from(results[0].flagged);
            nonuniform_hits += usize::from(results[1].flagged);
            // The focal indicator is 1 and the focal group is advantaged,
            // so the group coefficient is positive.
            assert!(results[0].effect > 0.0);
        }
        assert!(uniform_hits >= 4, "uniform flagged {uniform_hits}/5");
        assert!(
            nonuniform_hits <= 1,
            "nonuniform flagged {nonuniform_hits}/5"
        );
    }

    #[test]
    fn logistic_flags_interaction_dif_as_nonuniform() {
        let mut hits = 0;
        for seed in 0..5 {
            let scored = simulated_dif(DifKind::Nonuniform, 0.9, 1500, 400 + seed, vec![0]);
            let results = logistic_dif(&scored, "q1", 0.05).unwrap();
            hits += usize::from(results[1].flagged);
        }
        assert!(hits >= 4, "nonuniform flagged {hits}/5 seeds");
    }

    #[test]
    fn dtf_summary_rules() {
        let make = |item: &str, flagged: bool| DifResult {
            item: item.to_string(),
            method: DifMethod::Mh,
            statistic: 1.0,
            p_value: if flagged { 0.01 } else { 0.5 },
            effect: 1.0,
            flagged,
            alpha: 0.05,
            reference: "a".into(),
            focal: "b".into(),
            strata_used: Some(5),
            strata_dropped: Some(0),
        };
        let mut results: Vec<DifResult> =
            (1..=10).map(|i| make(&format!("q{i}"), i <= 3)).collect();
        let summary = dtf_summary(&results, 0.25);
        assert_eq!(summary.items_total, 10);
        assert_eq!(summary.items_flagged, 3);
        assert!(summary.warning, "3/10 exceeds 0.25");

        for r in &mut results {
            r.flagged = false;
        }
        let clean = dtf_summary(&results, 0.25);
        assert!(!clean.warning);
        assert_eq!(clean.items_flagged, 0);

        let empty = dtf_summary(&[], 0.25);
        assert!(!empty.warning);
        assert_eq!(empty.items_total, 0);
        assert_eq!(empty.proportion_flagged, 0.0);
    }

    #[test]
    fn dtf_counts_methods_separately() {
        let scored = simulated_dif(DifKind::Uniform, 0.8, 800, 500, vec![0]);
        let mut results = vec![mantel_haenszel_dif(&scored, "q1", 5, 0.05).unwrap()];
        results.extend(logistic_dif(&scored, "q1", 0.05).unwrap());
        let summary = dtf_summary(&results, 0.25);
        assert_eq!(summary.per_method.len(), 3);
        assert_eq!(summary.items_total, 1);
        for m in &summary.per_method {
            assert_eq!(m.total, 1);
        }
    }
}
