//! Machine-readable report schema, versioned from 1.
//!
//! Field names and nesting are a stable contract: readers match on
//! `schema_version` and can rely on every name below. Matrices are plain
//! row-major nested arrays. Reports round-trip losslessly through JSON;
//! non-finite numbers never appear (undefined statistics are omitted or
//! `null` through `Option`).

use serde::{Deserialize, Serialize};

use psychometrics_core::efa::{ExtractionAdvice, FactorSolution, ParallelAnalysis, StructureFlags};
use psychometrics_core::fairness::{DifResult, DtfSummary, GroupFacilityRow};
use psychometrics_core::item::ItemStats;
use psychometrics_core::reliability::{
    CronbachAlpha, KappaResult, KrippendorffAlpha, Sem, SplitHalf, TestRetest,
};
use psychometrics_core::validity::{DifferentialValidity, ValidityReport};

use crate::config::Config;

pub const SCHEMA_VERSION: u32 = 1;

fn is_false(v: &bool) -> bool {
    !v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    /// Subcommand that produced the report.
    pub command: String,
    /// Effective configuration after environment overrides.
    pub config: Config,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dataset: Option<DatasetSummary>,
    /// Sample-size and structure warnings; never gates.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub advisories: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub item_analysis: Option<ItemAnalysisSection>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub efa: Option<EfaSection>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub standardization: Option<StandardizationSection>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reliability: Option<ReliabilitySection>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub validity: Option<ValiditySection>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fairness: Option<FairnessSection>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub simulation: Option<SimulationSection>,
}

impl EvaluationReport {
    pub fn new(command: &str, config: Config) -> Self {
        EvaluationReport {
            schema_version: SCHEMA_VERSION,
            tool: "psychometrics".to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            dataset: None,
            advisories: Vec::new(),
            item_analysis: None,
            efa: None,
            standardization: None,
            reliability: None,
            validity: None,
            fairness: None,
            simulation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    /// Rows remaining after listwise deletion.
    pub participants: usize,
    pub items: usize,
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemAnalysisSection {
    pub low_variance_threshold: f64,
    pub items: Vec<ItemRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRow {
    pub id: String,
    pub facility: f64,
    pub variance: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub discrimination: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub corrected_discrimination: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub flags: Vec<String>,
}

impl From<&ItemStats> for ItemRow {
    fn from(s: &ItemStats) -> Self {
        ItemRow {
            id: s.id.clone(),
            facility: s.facility,
            variance: s.variance,
            discrimination: s.discrimination,
            corrected_discrimination: s.corrected_discrimination,
            flags: s
                .flags
                .iter()
                .map(|f| {
                    serde_json::to_value(f)
                        .expect("item flag serializes")
                        .as_str()
                        .expect("item flag is a string")
                        .to_string()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfaSection {
    pub advice: AdviceReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub solution: Option<SolutionReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub structure: Option<StructureReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdviceReport {
    /// Eigenvalue-above-1 count.
    pub k1: usize,
    pub scree: Vec<ScreePoint>,
    pub vss: Vec<VssPoint>,
    pub parallel: ParallelReport,
    /// Factor count the pipeline extracts.
    pub chosen: usize,
    /// "parallel_analysis" or "config".
    pub chosen_by: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreePoint {
    pub component: usize,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VssPoint {
    pub k: usize,
    pub criterion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelReport {
    pub observed: Vec<f64>,
    pub random_mean: Vec<f64>,
    pub random_p95: Vec<f64>,
    pub retained: usize,
    pub criterion: String,
    pub replicates: usize,
    pub seed: u64,
}

impl From<&ParallelAnalysis> for ParallelReport {
    fn from(pa: &ParallelAnalysis) -> Self {
        ParallelReport {
            observed: pa.observed.clone(),
            random_mean: pa.random_mean.clone(),
            random_p95: pa.random_p95.clone(),
            retained: pa.retained,
            criterion: enum_name(&pa.criterion),
            replicates: pa.replicates,
            seed: pa.seed,
        }
    }
}

impl From<&ExtractionAdvice> for AdviceReport {
    fn from(a: &ExtractionAdvice) -> Self {
        AdviceReport {
            k1: a.k1,
            scree: a
                .scree
                .iter()
                .map(|r| ScreePoint {
                    component: r.component,
                    eigenvalue: r.eigenvalue,
                })
                .collect(),
            vss: a
                .vss
                .iter()
                .map(|r| VssPoint {
                    k: r.k,
                    criterion: r.criterion,
                })
                .collect(),
            parallel: ParallelReport::from(&a.parallel),
            chosen: a.chosen,
            chosen_by: enum_name(&a.chosen_by),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub extraction: String,
    pub rotation: String,
    pub items: Vec<String>,
    /// Pattern loadings, one row per item.
    pub loadings: Vec<Vec<f64>>,
    pub communalities: Vec<f64>,
    pub uniquenesses: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Sum of squared loadings per factor.
    pub explained_variance: Vec<f64>,
    pub factor_correlations: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub heywood_items: Vec<String>,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl From<&FactorSolution> for SolutionReport {
    fn from(s: &FactorSolution) -> Self {
        SolutionReport {
            extraction: enum_name(&s.method),
            rotation: enum_name(&s.rotation),
            items: s.items.clone(),
            loadings: matrix_rows(&s.loadings),
            communalities: s.communalities.clone(),
            uniquenesses: s.uniquenesses.clone(),
            eigenvalues: s.eigenvalues.clone(),
            explained_variance: s.explained_variance(),
            factor_correlations: matrix_rows(&s.factor_correlations),
            heywood_items: s.heywood_items.clone(),
            iterations: s.iterations,
            notes: s.notes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub salience_threshold: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub crossloading_items: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub orphan_items: Vec<String>,
    /// 0-based factor columns with fewer than 3 salient items.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub underidentified_factors: Vec<usize>,
}

impl From<&StructureFlags> for StructureReport {
    fn from(f: &StructureFlags) -> Self {
        StructureReport {
            salience_threshold: f.threshold,
            crossloading_items: f.crossloading_items.clone(),
            orphan_items: f.orphan_items.clone(),
            underidentified_factors: f.underidentified_factors.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationSection {
    pub norm_mean: f64,
    pub norm_sd: f64,
    /// "sample" or "config".
    pub norm_source: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub transform: Option<String>,
    pub scores: Vec<StandardScoreRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScoreRow {
    pub participant: String,
    pub total: f64,
    /// Present when a transform was applied; z/t/bins derive from it.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub transformed: Option<f64>,
    pub z: f64,
    pub t: f64,
    pub stanine: u8,
    pub sten: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReliabilitySection {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cronbach_alpha: Option<AlphaReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub split_half: Option<SplitHalfReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub test_retest: Option<RetestReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sem: Option<SemReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub interrater: Option<InterraterReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub value: f64,
    pub n_items: usize,
    pub n_participants: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_if_deleted: Option<Vec<ItemAlphaRow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemAlphaRow {
    pub item: String,
    pub alpha: f64,
}

impl From<&CronbachAlpha> for AlphaReport {
    fn from(a: &CronbachAlpha) -> Self {
        AlphaReport {
            value: a.value,
            n_items: a.n_items,
            n_participants: a.n_participants,
            alpha_if_deleted: a.alpha_if_deleted.as_ref().map(|rows| {
                rows.iter()
                    .map(|r| ItemAlphaRow {
                        item: r.item.clone(),
                        alpha: r.alpha,
                    })
                    .collect()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitHalfReport {
    pub half_correlation: f64,
    /// Spearman-Brown full-length reliability.
    pub value: f64,
    pub odd_items: Vec<String>,
    pub even_items: Vec<String>,
}

impl From<&SplitHalf> for SplitHalfReport {
    fn from(s: &SplitHalf) -> Self {
        SplitHalfReport {
            half_correlation: s.half_correlation,
            value: s.value,
            odd_items: s.odd_items.clone(),
            even_items: s.even_items.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetestReport {
    /// Reported coefficient; negative raw correlations floor at 0.
    pub value: f64,
    pub raw: f64,
    pub n_pairs: usize,
    pub method: String,
}

impl From<&TestRetest> for RetestReport {
    fn from(r: &TestRetest) -> Self {
        RetestReport {
            value: r.value,
            raw: r.raw,
            n_pairs: r.n_pairs,
            method: enum_name(&r.method),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemReport {
    pub value: f64,
    pub ci_half_width: f64,
    pub form: String,
    pub reliability: f64,
    /// "cronbach_alpha" or "config".
    pub reliability_source: String,
}

impl SemReport {
    pub fn from_core(s: &Sem, source: &str) -> Self {
        SemReport {
            value: s.value,
            ci_half_width: s.ci_half_width,
            form: enum_name(&s.form),
            reliability: s.reliability,
            reliability_source: source.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterraterReport {
    /// "cohen_kappa", "fleiss_kappa", or "krippendorff_alpha".
    pub statistic: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub observed_agreement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expected_agreement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_subjects: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub level: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_pairable: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub units_skipped: Option<usize>,
}

impl InterraterReport {
    pub fn from_kappa(statistic: &str, k: &KappaResult) -> Self {
        InterraterReport {
            statistic: statistic.to_string(),
            value: k.value,
            observed_agreement: Some(k.observed_agreement),
            expected_agreement: Some(k.expected_agreement),
            n_subjects: Some(k.n),
            level: None,
            n_pairable: None,
            units_skipped: None,
        }
    }

    pub fn from_krippendorff(a: &KrippendorffAlpha) -> Self {
        InterraterReport {
            statistic: "krippendorff_alpha".to_string(),
            value: a.value,
            observed_agreement: None,
            expected_agreement: None,
            n_subjects: None,
            level: Some(enum_name(&a.level)),
            n_pairable: Some(a.n_pairable),
            units_skipped: Some(a.units_skipped),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ValiditySection {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub predictive: Option<ValidityRow>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub concurrent: Option<ValidityRow>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub differential: Option<DifferentialRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityRow {
    pub criterion_column: String,
    pub correlation: f64,
    pub n: usize,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub meets_threshold: Option<bool>,
}

impl ValidityRow {
    pub fn from_core(r: &ValidityReport, column: &str) -> Self {
        ValidityRow {
            criterion_column: column.to_string(),
            correlation: r.correlation,
            n: r.n,
            method: enum_name(&r.method),
            meets_threshold: r.meets_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialRow {
    pub convergent_column: String,
    pub discriminant_column: String,
    pub convergent: f64,
    pub discriminant: f64,
    pub discrepancy: f64,
    pub concern: bool,
    pub n: usize,
    pub method: String,
}

impl DifferentialRow {
    pub fn from_core(d: &DifferentialValidity, convergent: &str, discriminant: &str) -> Self {
        DifferentialRow {
            convergent_column: convergent.to_string(),
            discriminant_column: discriminant.to_string(),
            convergent: d.convergent,
            discriminant: d.discriminant,
            discrepancy: d.discrepancy,
            concern: d.concern,
            n: d.n,
            method: enum_name(&d.method),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessSection {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dichotomized_at: Option<f64>,
    pub group_facilities: Vec<GroupFacilityReport>,
    pub dif: Vec<DifRow>,
    pub dtf: DtfReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFacilityReport {
    pub item: String,
    pub facilities: Vec<GroupFacilityValue>,
    pub max_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFacilityValue {
    pub group: String,
    pub value: f64,
}

impl From<&GroupFacilityRow> for GroupFacilityReport {
    fn from(r: &GroupFacilityRow) -> Self {
        GroupFacilityReport {
            item: r.item.clone(),
            facilities: r
                .facilities
                .iter()
                .map(|gv| GroupFacilityValue {
                    group: gv.group.clone(),
                    value: gv.value,
                })
                .collect(),
            max_difference: r.max_difference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifRow {
    pub item: String,
    /// "mh", "logistic_uniform", or "logistic_nonuniform".
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    /// MH common odds ratio, or the added logistic coefficient.
    pub effect: f64,
    #[serde(skip_serializing_if = "is_false", default)]
    pub flagged: bool,
    pub alpha: f64,
    pub reference: String,
    pub focal: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub strata_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub strata_dropped: Option<usize>,
}

impl From<&DifResult> for DifRow {
    fn from(r: &DifResult) -> Self {
        DifRow {
            item: r.item.clone(),
            method: enum_name(&r.method),
            statistic: r.statistic,
            p_value: r.p_value,
            effect: r.effect,
            flagged: r.flagged,
            alpha: r.alpha,
            reference: r.reference.clone(),
            focal: r.focal.clone(),
            strata_used: r.strata_used,
            strata_dropped: r.strata_dropped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtfReport {
    pub items_total: usize,
    pub items_flagged: usize,
    pub proportion_flagged: f64,
    pub threshold: f64,
    pub warning: bool,
    pub per_method: Vec<MethodCountReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCountReport {
    pub method: String,
    pub flagged: usize,
    pub total: usize,
}

impl From<&DtfSummary> for DtfReport {
    fn from(d: &DtfSummary) -> Self {
        DtfReport {
            items_total: d.items_total,
            items_flagged: d.items_flagged,
            proportion_flagged: d.proportion_flagged,
            threshold: d.threshold,
            warning: d.warning,
            per_method: d
                .per_method
                .iter()
                .map(|m| MethodCountReport {
                    method: enum_name(&m.method),
                    flagged: m.flagged,
                    total: m.total,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSection {
    pub model: String,
    pub seed: u64,
    pub participants: usize,
    pub items: usize,
    /// Files written into the output directory.
    pub files: Vec<String>,
    /// Retest model only: reliability implied by the variance split.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub implied_reliability: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

/// Serialized name of a unit enum variant, reusing its serde rename rules
/// so the report and the config file speak the same vocabulary.
pub fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .expect("enum serializes")
        .as_str()
        .expect("unit enum serializes to a string")
        .to_string()
}

/// Row-major nested vectors for JSON rendering.
pub fn matrix_rows(m: &ndarray::Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}
