//! Subcommand implementations: each builds an [`EvaluationReport`] from the
//! inputs and the effective configuration.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context as _, Result};
use ndarray::Array2;

use psychometrics_core::data::{listwise_delete, load_csv, score, ResponseMatrix, ScoredTest};
use psychometrics_core::efa::{
    advise, crossloading_flags, paf, pca, rotate_promax, rotate_varimax, Extraction, Rotation,
};
use psychometrics_core::fairness::{
    dtf_summary, facility_by_group, logistic_dif, mantel_haenszel_dif,
};
use psychometrics_core::item::{item_report, ItemThresholds};
use psychometrics_core::reliability::{
    cohen_kappa, cronbach_alpha, fleiss_kappa, krippendorff_alpha, sem, split_half, test_retest,
    AgreementLevel,
};
use psychometrics_core::simulate::{
    generate_dif_data, generate_factor_data, generate_retest_pair, DifSimSpec, FactorModelSpec,
    LikertBins, TrueScoreSpec,
};
use psychometrics_core::standardize::{
    normalize, stanine, sten, t_score, z_score, NormReference, NormalizeTransform,
};
use psychometrics_core::stats::correlation_matrix;
use psychometrics_core::validity::{
    concurrent_validity, differential_validity, predictive_validity,
};
use psychometrics_core::{Error, ScaleSpec, TestType};

use crate::config::{
    Config, DifMethodChoice, InterraterKind, SimulateModel, Transform, UsageError,
};
use crate::report::*;

/// Pilot-study sample-size floor; below it every analysis gets an advisory.
const PILOT_MINIMUM: usize = 30;
/// Observations required per item before factor analysis is comfortable.
const OBS_PER_ITEM: usize = 5;

pub struct LoadedData {
    pub scored: ScoredTest,
    /// Complete matrix after listwise deletion, with aligned aux columns.
    pub matrix: ResponseMatrix,
    pub summary: DatasetSummary,
}

pub fn load_input(input: &Path, cfg: &Config) -> Result<LoadedData> {
    let spec = cfg.scale_spec();
    let raw = load_csv(input, &spec).with_context(|| format!("loading {}", input.display()))?;
    let (matrix, dropped) = listwise_delete(&raw)?;
    let scored = score(&matrix, &spec)?;
    let summary = DatasetSummary {
        participants: scored.n_participants(),
        items: scored.n_items(),
        dropped_rows: dropped,
    };
    Ok(LoadedData {
        scored,
        matrix,
        summary,
    })
}

pub fn small_sample_advisory(n: usize) -> Option<String> {
    (n < PILOT_MINIMUM).then(|| {
        format!(
            "sample size {n} is below the customary minimum of {PILOT_MINIMUM} \
             even for a pilot study; treat every statistic as provisional"
        )
    })
}

fn efa_sample_advisory(n: usize, items: usize) -> Option<String> {
    (n < OBS_PER_ITEM * items).then(|| {
        format!(
            "sample size {n} gives fewer than {OBS_PER_ITEM} observations per item \
             ({items} items); factor analysis results are unstable"
        )
    })
}

pub fn run_item_analysis(scored: &ScoredTest, cfg: &Config) -> Result<ItemAnalysisSection> {
    let thresholds = ItemThresholds {
        low_variance_knowledge: cfg.items.low_variance_knowledge,
        low_variance_likert: cfg.items.low_variance_likert,
    };
    let stats = item_report(scored, &thresholds)?;
    let threshold = match scored.test_type {
        TestType::Knowledge => thresholds.low_variance_knowledge,
        TestType::Person => thresholds.low_variance_likert,
    };
    Ok(ItemAnalysisSection {
        low_variance_threshold: threshold,
        items: stats.iter().map(ItemRow::from).collect(),
    })
}

pub fn run_efa(
    scored: &ScoredTest,
    cfg: &Config,
    advisories: &mut Vec<String>,
) -> Result<EfaSection> {
    if let Some(a) = efa_sample_advisory(scored.n_participants(), scored.n_items()) {
        advisories.push(a);
    }
    let method = cfg.efa.correlation;
    let c = correlation_matrix(scored, method)?;
    let advice = advise(
        scored,
        &c,
        method,
        cfg.efa.replicates,
        cfg.efa.parallel_criterion,
        cfg.efa.seed,
        cfg.efa.factors,
    )?;

    let mut section = EfaSection {
        advice: AdviceReport::from(&advice),
        solution: None,
        structure: None,
        notes: Vec::new(),
    };
    if advice.chosen == 0 {
        section.notes.push(
            "no factors retained; extraction skipped (set efa.factors to force one)".to_string(),
        );
        return Ok(section);
    }

    let unrotated = match cfg.efa.extraction {
        Extraction::Pca => pca(&c, advice.chosen)?,
        Extraction::Paf => paf(&c, advice.chosen)?,
    };
    let rotated = match cfg.efa.rotation {
        Rotation::None => unrotated,
        Rotation::Varimax => rotate_varimax(&unrotated, cfg.efa.kaiser_normalize)?,
        Rotation::Promax => rotate_promax(&unrotated, cfg.efa.promax_power)?,
    };
    let flags = crossloading_flags(&rotated, cfg.efa.salience);
    for &f in &flags.underidentified_factors {
        advisories.push(format!(
            "factor {} has fewer than 3 items loading at |{}| or above; \
             it is underidentified",
            f + 1,
            cfg.efa.salience
        ));
    }
    section.solution = Some(SolutionReport::from(&rotated));
    section.structure = Some(StructureReport::from(&flags));
    Ok(section)
}

pub fn run_standardize(scored: &ScoredTest, cfg: &Config) -> Result<StandardizationSection> {
    let totals = scored.totals.clone();
    let (working, transform_name) = match cfg.standardize.transform {
        None => (totals.clone(), None),
        Some(Transform::Log) => (
            normalize(&totals, NormalizeTransform::Log)?,
            Some("log".to_string()),
        ),
        Some(Transform::Sqrt) => (
            normalize(&totals, NormalizeTransform::Sqrt)?,
            Some("sqrt".to_string()),
        ),
    };
    let (norm, source) = match (cfg.standardize.norm_mean, cfg.standardize.norm_sd) {
        (Some(m), Some(s)) => (NormReference::new(m, s)?, "config"),
        _ => (NormReference::from_sample(&working)?, "sample"),
    };
    let scores = scored
        .participants
        .iter()
        .zip(totals.iter().zip(&working))
        .map(|(id, (&total, &w))| {
            let z = z_score(w, &norm);
            StandardScoreRow {
                participant: id.clone(),
                total,
                transformed: transform_name.as_ref().map(|_| w),
                z,
                t: t_score(w, &norm),
                stanine: stanine(z),
                sten: sten(z),
            }
        })
        .collect();
    Ok(StandardizationSection {
        norm_mean: norm.mean(),
        norm_sd: norm.sd(),
        norm_source: source.to_string(),
        transform: transform_name,
        scores,
    })
}

pub fn run_reliability(
    scored: &ScoredTest,
    retest: Option<&ScoredTest>,
    cfg: &Config,
) -> Result<ReliabilitySection> {
    let mut section = ReliabilitySection::default();
    // Internal-consistency statistics need multiple items; a single-column
    // test (a retest score file, say) still gets stability and SEM.
    if scored.n_items() >= 2 {
        let alpha = cronbach_alpha(scored)?;
        section.split_half = Some(SplitHalfReport::from(&split_half(scored)?));
        section.cronbach_alpha = Some(AlphaReport::from(&alpha));
    }
    if let Some(second) = retest {
        let rt = test_retest(scored, second, cfg.validity.method)?;
        section.test_retest = Some(RetestReport::from(&rt));
    }
    let reliability = match cfg.reliability.sem_reliability {
        Some(r) => Some((r, "config")),
        None => section
            .cronbach_alpha
            .as_ref()
            .map(|a| (a.value, "cronbach_alpha"))
            .or_else(|| {
                section
                    .test_retest
                    .as_ref()
                    .map(|r| (r.value, "test_retest"))
            }),
    };
    if let Some((rel, source)) = reliability {
        section.sem = Some(SemReport::from_core(
            &sem(scored, rel, cfg.reliability.sem_form)?,
            source,
        ));
    }
    Ok(section)
}

/// Rater-agreement statistics. The input is read as one column per rater
/// and one row per rated subject; empty cells are unscored.
pub fn run_interrater(input: &Path, kind: InterraterKind) -> Result<ReliabilitySection> {
    // Scale bounds are irrelevant here: ratings are categorical codes and
    // are never scored against the scale.
    let spec = ScaleSpec::person(0.0, 1.0);
    let m = load_csv(input, &spec)?;
    let n_units = m.n_participants();
    let n_raters = m.n_items();

    let complete_pair = |a: usize, b: usize| -> (Vec<f64>, Vec<f64>) {
        let mut first = Vec::new();
        let mut second = Vec::new();
        for i in 0..n_units {
            if let (Some(x), Some(y)) = (m.get(i, a), m.get(i, b)) {
                first.push(x);
                second.push(y);
            }
        }
        (first, second)
    };

    let interrater = match kind {
        InterraterKind::Cohen => {
            if n_raters != 2 {
                return Err(UsageError(format!(
                    "Cohen's kappa needs exactly 2 rater columns, found {n_raters}"
                ))
                .into());
            }
            let (first, second) = complete_pair(0, 1);
            InterraterReport::from_kappa("cohen_kappa", &cohen_kappa(&first, &second)?)
        }
        InterraterKind::Fleiss => {
            let (complete, _) = listwise_delete(&m)?;
            let ratings =
                Array2::from_shape_fn((complete.n_participants(), complete.n_items()), |(i, j)| {
                    complete.get(i, j).expect("listwise-complete matrix")
                });
            InterraterReport::from_kappa("fleiss_kappa", &fleiss_kappa(&ratings)?)
        }
        InterraterKind::KrippendorffNominal | InterraterKind::KrippendorffInterval => {
            let level = match kind {
                InterraterKind::KrippendorffNominal => AgreementLevel::Nominal,
                _ => AgreementLevel::Interval,
            };
            let ratings: Vec<Vec<Option<f64>>> = (0..n_raters)
                .map(|r| (0..n_units).map(|u| m.get(u, r)).collect())
                .collect();
            InterraterReport::from_krippendorff(&krippendorff_alpha(&ratings, level)?)
        }
    };
    Ok(ReliabilitySection {
        interrater: Some(interrater),
        ..ReliabilitySection::default()
    })
}

/// Pair totals with an auxiliary column, dropping rows where the column is
/// missing. Errors when the pairing leaves nothing.
fn paired_with_aux(
    scored: &ScoredTest,
    aux: &BTreeMap<String, Vec<Option<f64>>>,
    column: &str,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let values = aux
        .get(column)
        .ok_or_else(|| UsageError(format!("auxiliary column '{column}' was not loaded")))?;
    let mut totals = Vec::new();
    let mut criterion = Vec::new();
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            totals.push(scored.totals[i]);
            criterion.push(*v);
        }
    }
    Ok((totals, criterion))
}

pub fn run_validity(
    scored: &ScoredTest,
    matrix: &ResponseMatrix,
    cfg: &Config,
) -> Result<Option<ValiditySection>> {
    let v = &cfg.validity;
    if v.predictive_column.is_none()
        && v.concurrent_column.is_none()
        && v.convergent_column.is_none()
    {
        return Ok(None);
    }
    let mut section = ValiditySection::default();
    if let Some(col) = &v.predictive_column {
        let (t, c) = paired_with_aux(scored, &matrix.aux, col)?;
        section.predictive = Some(ValidityRow::from_core(
            &predictive_validity(&t, &c, v.method)?,
            col,
        ));
    }
    if let Some(col) = &v.concurrent_column {
        let (t, c) = paired_with_aux(scored, &matrix.aux, col)?;
        section.concurrent = Some(ValidityRow::from_core(
            &concurrent_validity(&t, &c, v.method)?,
            col,
        ));
    }
    if let (Some(conv), Some(disc)) = (&v.convergent_column, &v.discriminant_column) {
        // Align on rows where the totals and both measures are present.
        let conv_vals = matrix
            .aux
            .get(conv)
            .ok_or_else(|| UsageError(format!("auxiliary column '{conv}' was not loaded")))?;
        let disc_vals = matrix
            .aux
            .get(disc)
            .ok_or_else(|| UsageError(format!("auxiliary column '{disc}' was not loaded")))?;
        let mut t = Vec::new();
        let mut cv = Vec::new();
        let mut dv = Vec::new();
        for i in 0..scored.n_participants() {
            if let (Some(c), Some(d)) = (conv_vals[i], disc_vals[i]) {
                t.push(scored.totals[i]);
                cv.push(c);
                dv.push(d);
            }
        }
        section.differential = Some(DifferentialRow::from_core(
            &differential_validity(&t, &cv, &dv, v.method)?,
            conv,
            disc,
        ));
    }
    Ok(Some(section))
}

/// Recode every scored column to 1 at or above the cut, 0 below.
fn dichotomize(scored: &ScoredTest, cut: f64) -> Result<ScoredTest> {
    let values = scored.scores.mapv(|v| f64::from(v >= cut));
    let mut out = ScoredTest::from_columns_with_ids(
        scored.participants.clone(),
        scored.items.clone(),
        values,
    )?;
    out.test_type = TestType::Knowledge;
    out.groups = scored.groups.clone();
    Ok(out)
}

pub fn run_dif(
    scored: &ScoredTest,
    cfg: &Config,
    advisories: &mut Vec<String>,
) -> Result<FairnessSection> {
    // Group facilities describe the observed scale; DIF statistics run on
    // the (possibly dichotomized) 0/1 responses.
    let group_facilities: Vec<GroupFacilityReport> = facility_by_group(scored)?
        .iter()
        .map(GroupFacilityReport::from)
        .collect();

    let analyzed_storage;
    let analyzed: &ScoredTest = match cfg.dif.dichotomize_at {
        Some(cut) => {
            analyzed_storage = dichotomize(scored, cut)?;
            &analyzed_storage
        }
        None => scored,
    };

    let mut rows: Vec<DifRow> = Vec::new();
    let mut core_results = Vec::new();
    for item in &analyzed.items {
        for method in &cfg.dif.methods {
            match method {
                DifMethodChoice::Mh => {
                    let r = mantel_haenszel_dif(analyzed, item, cfg.dif.strata, cfg.dif.alpha)?;
                    rows.push(DifRow::from(&r));
                    core_results.push(r);
                }
                DifMethodChoice::Logistic => {
                    for r in logistic_dif(analyzed, item, cfg.dif.alpha)? {
                        rows.push(DifRow::from(&r));
                        core_results.push(r);
                    }
                }
            }
        }
    }
    let dtf = dtf_summary(&core_results, cfg.dif.dtf_threshold);
    if dtf.warning {
        advisories.push(format!(
            "differential test functioning: {} of {} items show DIF \
             (proportion {:.3} exceeds {:.3})",
            dtf.items_flagged, dtf.items_total, dtf.proportion_flagged, dtf.threshold
        ));
    }
    Ok(FairnessSection {
        dichotomized_at: cfg.dif.dichotomize_at,
        group_facilities,
        dif: rows,
        dtf: DtfReport::from(&dtf),
    })
}

/// Output of a simulation run: section plus `(file name, contents)` pairs.
pub struct SimulationOutput {
    pub section: SimulationSection,
    pub files: Vec<(String, String)>,
}

pub fn run_simulate(cfg: &Config) -> Result<SimulationOutput> {
    let sim = &cfg.simulate;
    let likert = match (sim.likert_min, sim.likert_max) {
        (Some(min), Some(max)) => Some(LikertBins { min, max }),
        (None, None) => None,
        _ => {
            return Err(UsageError(
                "simulate.likert_min and simulate.likert_max must be set together".to_string(),
            )
            .into())
        }
    };
    let factor_spec = || {
        let mut spec =
            FactorModelSpec::simple_structure(sim.n, sim.items, sim.factors, sim.loading, sim.seed);
        spec.likert = likert;
        spec
    };

    let mut files: Vec<(String, String)> = Vec::new();
    let mut warnings = Vec::new();
    let mut implied_reliability = None;
    let (participants, items) = match sim.model {
        SimulateModel::Factor => {
            let m = generate_factor_data(&factor_spec())?;
            files.push(("data.csv".to_string(), m.to_csv_string()));
            (m.n_participants(), m.n_items())
        }
        SimulateModel::Dif => {
            let dif_items = sim
                .dif_items
                .iter()
                .map(|&pos| {
                    if pos == 0 || pos > sim.items {
                        Err(UsageError(format!(
                            "simulate.dif_items position {pos} is outside 1..={}",
                            sim.items
                        )))
                    } else {
                        Ok(pos - 1)
                    }
                })
                .collect::<Result<Vec<usize>, UsageError>>()?;
            let data = generate_dif_data(&DifSimSpec {
                base: factor_spec(),
                dif_items,
                kind: sim.dif_kind,
                magnitude: sim.dif_magnitude,
                reference_fraction: sim.reference_fraction,
            })?;
            warnings = data.warnings;
            files.push(("data.csv".to_string(), data.matrix.to_csv_string()));
            (data.matrix.n_participants(), data.matrix.n_items())
        }
        SimulateModel::Retest => {
            let spec = TrueScoreSpec {
                n: sim.n,
                true_variance: sim.true_variance,
                error_variance: sim.error_variance,
                seed: sim.seed,
            };
            let (first, second) = generate_retest_pair(&spec)?;
            implied_reliability = Some(spec.implied_reliability());
            for (name, t) in [
                ("administration1.csv", &first),
                ("administration2.csv", &second),
            ] {
                let mut csv = String::from("participant_id,score\n");
                for (id, v) in t.participants.iter().zip(&t.totals) {
                    csv.push_str(&format!("{id},{v}\n"));
                }
                files.push((name.to_string(), csv));
            }
            (sim.n, 1)
        }
    };

    // Sidecar recording the generation spec, so any dataset can be traced
    // back to the exact generator call.
    let sidecar = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "simulate": sim,
    });
    files.push((
        "spec.json".to_string(),
        serde_json::to_string_pretty(&sidecar)? + "\n",
    ));

    let section = SimulationSection {
        model: enum_name(&sim.model),
        seed: sim.seed,
        participants,
        items,
        files: files.iter().map(|(name, _)| name.clone()).collect(),
        implied_reliability,
        warnings,
    };
    Ok(SimulationOutput { section, files })
}

/// Full pipeline: item analysis, EFA, standardization, reliability,
/// validity (when criterion columns are configured), and DIF (when a
/// group column is present).
pub fn run_report(
    data: &LoadedData,
    retest: Option<&ScoredTest>,
    cfg: &Config,
) -> Result<EvaluationReport> {
    let mut report = EvaluationReport::new("report", cfg.clone());
    report.dataset = Some(data.summary.clone());
    if let Some(a) = small_sample_advisory(data.scored.n_participants()) {
        report.advisories.push(a);
    }
    report.item_analysis = Some(run_item_analysis(&data.scored, cfg)?);
    report.efa = Some(run_efa(&data.scored, cfg, &mut report.advisories)?);
    report.standardization = Some(run_standardize(&data.scored, cfg)?);
    report.reliability = Some(run_reliability(&data.scored, retest, cfg)?);
    report.validity = run_validity(&data.scored, &data.matrix, cfg)?;
    if data.scored.groups.is_some() {
        report.fairness = Some(run_dif(&data.scored, cfg, &mut report.advisories)?);
    }
    Ok(report)
}

/// Map an error chain onto the documented exit codes: 1 usage, 2 data,
/// 3 numerical.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e.kind() {
            psychometrics_core::ErrorKind::Spec => 1,
            psychometrics_core::ErrorKind::Data => 2,
            psychometrics_core::ErrorKind::Numerical => 3,
        };
    }
    2
}
