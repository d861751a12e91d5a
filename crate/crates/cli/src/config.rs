//! Configuration file schema, validation, and environment overrides.
//!
//! Config files are TOML: flat `key = value` pairs grouped into sections.
//! Every key is checked against the schema below; unknown keys are
//! collected and reported together instead of being silently ignored.
//! Any key can be overridden through the environment as
//! `PSYCHOMETRICS_<SECTION>_<KEY>` (for example
//! `PSYCHOMETRICS_EFA_REPLICATES=500`); values are parsed as TOML, with a
//! plain-string fallback. The nested `[scale.key]` answer table has no
//! environment form.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use psychometrics_core::efa::{Extraction, ParallelCriterion, Rotation};
use psychometrics_core::reliability::SemForm;
use psychometrics_core::simulate::DifKind;
use psychometrics_core::stats::CorrelationMethod;
use psychometrics_core::{ScaleSpec, TestType};

/// Invalid invocation or configuration; mapped to the usage exit code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const ENV_PREFIX: &str = "PSYCHOMETRICS_";

/// `(section, keys)` pairs accepted in a config file. `[scale.key]` is a
/// free-form item -> answer table validated separately.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "scale",
        &[
            "test_type",
            "min_score",
            "max_score",
            "reverse_keyed",
            "group_column",
            "aux_columns",
            "key",
        ],
    ),
    ("items", &["low_variance_knowledge", "low_variance_likert"]),
    (
        "efa",
        &[
            "factors",
            "extraction",
            "rotation",
            "promax_power",
            "kaiser_normalize",
            "correlation",
            "replicates",
            "parallel_criterion",
            "salience",
            "seed",
        ],
    ),
    ("standardize", &["norm_mean", "norm_sd", "transform"]),
    (
        "reliability",
        &["sem_form", "sem_reliability", "interrater"],
    ),
    (
        "validity",
        &[
            "method",
            "predictive_column",
            "concurrent_column",
            "convergent_column",
            "discriminant_column",
        ],
    ),
    (
        "dif",
        &[
            "methods",
            "strata",
            "alpha",
            "dtf_threshold",
            "dichotomize_at",
        ],
    ),
    (
        "simulate",
        &[
            "model",
            "n",
            "items",
            "factors",
            "loading",
            "seed",
            "likert_min",
            "likert_max",
            "true_variance",
            "error_variance",
            "dif_items",
            "dif_kind",
            "dif_magnitude",
            "reference_fraction",
        ],
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Config {
    pub scale: ScaleConfig,
    pub items: ItemsConfig,
    pub efa: EfaConfig,
    pub standardize: StandardizeConfig,
    pub reliability: ReliabilityConfig,
    pub validity: ValidityConfig,
    pub dif: DifConfig,
    pub simulate: SimulateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleConfig {
    pub test_type: TestType,
    pub min_score: f64,
    pub max_score: f64,
    pub reverse_keyed: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_column: Option<String>,
    pub aux_columns: Vec<String>,
    /// Answer key for knowledge tests: item id -> correct response.
    pub key: BTreeMap<String, f64>,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        ScaleConfig {
            test_type: TestType::Person,
            min_score: 0.0,
            max_score: 5.0,
            reverse_keyed: Vec::new(),
            group_column: None,
            aux_columns: Vec::new(),
            key: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ItemsConfig {
    pub low_variance_knowledge: f64,
    pub low_variance_likert: f64,
}

impl Default for ItemsConfig {
    fn default() -> Self {
        ItemsConfig {
            low_variance_knowledge: 0.05,
            low_variance_likert: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EfaConfig {
    /// Fixed factor count; absent means the parallel-analysis result.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factors: Option<usize>,
    pub extraction: Extraction,
    pub rotation: Rotation,
    pub promax_power: u32,
    pub kaiser_normalize: bool,
    pub correlation: CorrelationMethod,
    pub replicates: usize,
    pub parallel_criterion: ParallelCriterion,
    /// Loading magnitude treated as salient when flagging structure.
    pub salience: f64,
    /// Seed for the parallel-analysis replicates (`--seed` overrides).
    pub seed: u64,
}

impl Default for EfaConfig {
    fn default() -> Self {
        EfaConfig {
            factors: None,
            extraction: Extraction::Paf,
            rotation: Rotation::Promax,
            promax_power: 4,
            kaiser_normalize: true,
            correlation: CorrelationMethod::Pearson,
            replicates: 1000,
            parallel_criterion: ParallelCriterion::Mean,
            salience: 0.32,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Log,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct StandardizeConfig {
    /// External norm; both values must be given together. Absent: norms
    /// come from the analyzed sample itself.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_sd: Option<f64>,
    /// Monotone transform applied to totals before standardizing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<Transform>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterraterKind {
    Cohen,
    Fleiss,
    KrippendorffNominal,
    KrippendorffInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReliabilityConfig {
    pub sem_form: SemForm,
    /// Reliability fed into the SEM; absent means Cronbach's alpha
    /// computed from the sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sem_reliability: Option<f64>,
    /// When set, the `reliability` subcommand reads the input as one
    /// column per rater and computes this agreement statistic instead of
    /// internal-consistency measures.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interrater: Option<InterraterKind>,
}

impl Default for ReliabilityConfig {
    fn default() -> Self {
        ReliabilityConfig {
            sem_form: SemForm::Conventional,
            sem_reliability: None,
            interrater: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidityConfig {
    pub method: CorrelationMethod,
    /// Criterion measured after the test (predictive validity).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictive_column: Option<String>,
    /// Established measure taken alongside the test (concurrent validity).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concurrent_column: Option<String>,
    /// Related / unrelated measure pair (differential validity).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergent_column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discriminant_column: Option<String>,
}

impl Default for ValidityConfig {
    fn default() -> Self {
        ValidityConfig {
            method: CorrelationMethod::Pearson,
            predictive_column: None,
            concurrent_column: None,
            convergent_column: None,
            discriminant_column: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifMethodChoice {
    Mh,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DifConfig {
    pub methods: Vec<DifMethodChoice>,
    pub strata: usize,
    pub alpha: f64,
    pub dtf_threshold: f64,
    /// Explicit dichotomization cut for Likert items: scored values at or
    /// above the cut count as correct. DIF on non-dichotomous items
    /// without this key is an error, never a silent recode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dichotomize_at: Option<f64>,
}

impl Default for DifConfig {
    fn default() -> Self {
        DifConfig {
            methods: vec![DifMethodChoice::Mh, DifMethodChoice::Logistic],
            strata: 5,
            alpha: 0.05,
            dtf_threshold: 0.25,
            dichotomize_at: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulateModel {
    Factor,
    Retest,
    Dif,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub model: SimulateModel,
    pub n: usize,
    /// Item count (factor and dif models).
    pub items: usize,
    pub factors: usize,
    /// Primary loading shared by every item in the simple structure.
    pub loading: f64,
    pub seed: u64,
    /// Likert discretization bounds; both or neither.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub likert_min: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub likert_max: Option<i64>,
    /// Retest model variance split.
    pub true_variance: f64,
    pub error_variance: f64,
    /// 1-based item positions receiving DIF (dif model).
    pub dif_items: Vec<usize>,
    pub dif_kind: DifKind,
    pub dif_magnitude: f64,
    pub reference_fraction: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            model: SimulateModel::Factor,
            n: 300,
            items: 12,
            factors: 3,
            loading: 0.7,
            seed: 42,
            likert_min: None,
            likert_max: None,
            true_variance: 1.0,
            error_variance: 0.25,
            dif_items: Vec::new(),
            dif_kind: DifKind::Uniform,
            dif_magnitude: 0.5,
            reference_fraction: 0.5,
        }
    }
}

impl Config {
    /// Read and validate a config file; `None` yields the defaults.
    /// Environment overrides apply in both cases.
    pub fn load(path: Option<&Path>) -> Result<Config, UsageError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| UsageError(format!("cannot read config {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| UsageError(format!("config {}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        apply_env_overrides(&mut table, |name| std::env::var(name).ok())?;
        validate_keys(&table)?;
        let cfg: Config = table
            .try_into()
            .map_err(|e| UsageError(format!("config: {e}")))?;
        cfg.check_consistency()?;
        Ok(cfg)
    }

    fn check_consistency(&self) -> Result<(), UsageError> {
        if self.standardize.norm_mean.is_some() != self.standardize.norm_sd.is_some() {
            return Err(UsageError(
                "standardize.norm_mean and standardize.norm_sd must be set together".to_string(),
            ));
        }
        if self.validity.convergent_column.is_some() != self.validity.discriminant_column.is_some()
        {
            return Err(UsageError(
                "validity.convergent_column and validity.discriminant_column must be set together"
                    .to_string(),
            ));
        }
        if self.dif.methods.is_empty() {
            return Err(UsageError(
                "dif.methods must name at least one method".to_string(),
            ));
        }
        Ok(())
    }

    /// Scale spec for loading and scoring the primary input. Validity
    /// columns are folded into the auxiliary set so one `[scale]` block
    /// serves the whole pipeline.
    pub fn scale_spec(&self) -> ScaleSpec {
        let mut aux: Vec<String> = self.scale.aux_columns.clone();
        for col in [
            &self.validity.predictive_column,
            &self.validity.concurrent_column,
            &self.validity.convergent_column,
            &self.validity.discriminant_column,
        ]
        .into_iter()
        .flatten()
        {
            if !aux.contains(col) {
                aux.push(col.clone());
            }
        }
        ScaleSpec {
            test_type: self.scale.test_type,
            min_score: self.scale.min_score,
            max_score: self.scale.max_score,
            reverse_keyed: self.scale.reverse_keyed.clone(),
            key: self.scale.key.clone(),
            group_column: self.scale.group_column.clone(),
            aux_columns: aux,
        }
    }
}

/// Overlay `PSYCHOMETRICS_<SECTION>_<KEY>` environment values onto the
/// parsed table. Only schema keys are consulted, so lookup order never
/// depends on the process environment as a whole.
fn apply_env_overrides(
    table: &mut toml::Table,
    get: impl Fn(&str) -> Option<String>,
) -> Result<(), UsageError> {
    for (section, keys) in SCHEMA {
        for key in *keys {
            if *section == "scale" && *key == "key" {
                continue;
            }
            let name = format!(
                "{ENV_PREFIX}{}_{}",
                section.to_uppercase(),
                key.to_uppercase()
            );
            let Some(raw) = get(&name) else { continue };
            let value = parse_env_value(&raw);
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(section_table) = entry else {
                return Err(UsageError(format!(
                    "config section '{section}' is not a table"
                )));
            };
            section_table.insert(key.to_string(), value);
        }
    }
    Ok(())
}

/// Environment values are TOML expressions (`7`, `true`, `["q1","q2"]`);
/// anything that does not parse is taken as a bare string.
fn parse_env_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed document has key v"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Reject unknown sections and keys, listing every offender at once.
fn validate_keys(table: &toml::Table) -> Result<(), UsageError> {
    let mut unknown = Vec::new();
    for (section, value) in table {
        let Some((_, keys)) = SCHEMA.iter().find(|(s, _)| s == section) else {
            unknown.push(section.clone());
            continue;
        };
        let Some(section_table) = value.as_table() else {
            unknown.push(section.clone());
            continue;
        };
        for key in section_table.keys() {
            if !keys.contains(&key.as_str()) {
                unknown.push(format!("{section}.{key}"));
            }
        }
    }
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(UsageError(format!(
            "unknown config keys: {}",
            unknown.join(", ")
        )))
    }
}
