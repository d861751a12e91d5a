//! Seeded response generators for calibration studies and reliability checks.
//!
//! All generators draw from ChaCha8, a named portable stream cipher RNG, so
//! a (seed, spec) pair reproduces bit-identical data on every platform.
//! Sub-streams are split by counter: factor `f` draws from stream `f`, and
//! the uniqueness column of item `j` draws from stream `k + j` (for `k`
//! factors). Columns can therefore be filled independently, and adding an
//! item never perturbs the draws of existing items.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{ResponseMatrix, ScoredTest};
use crate::error::{Error, Result};
use crate::stats::linalg::cholesky;

/// Integer Likert levels `min..=max`, assigned by equal-probability
/// thresholds on the standard normal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LikertBins {
    pub min: i64,
    pub max: i64,
}

/// Common-factor generative model: `X = F L^T + E` with `F ~ N(0, phi)`.
///
/// Uniquenesses are calibrated so every continuous item has unit variance;
/// specs implying a communality above 1 are rejected.
#[derive(Debug, Clone)]
pub struct FactorModelSpec {
    pub n: usize,
    /// One row per item, one column per factor.
    pub loadings: Array2<f64>,
    /// Factor correlation matrix (unit diagonal, positive definite).
    pub phi: Array2<f64>,
    /// When set, continuous responses are discretized to Likert levels.
    pub likert: Option<LikertBins>,
    pub seed: u64,
}

impl FactorModelSpec {
    /// Simple structure: `factors` blocks of equal size, all primary
    /// loadings equal, orthogonal factors.
    pub fn simple_structure(
        n: usize,
        items: usize,
        factors: usize,
        loading: f64,
        seed: u64,
    ) -> Self {
        let mut loadings = Array2::<f64>::zeros((items, factors));
        for j in 0..items {
            loadings[[j, j * factors / items.max(1)]] = loading;
        }
        FactorModelSpec {
            n,
            loadings,
            phi: Array2::eye(factors),
            likert: None,
            seed,
        }
    }
}

/// Classical true-score model for a retest pair: `X = T + E` with fresh
/// error draws per administration.
#[derive(Debug, Clone, Copy)]
pub struct TrueScoreSpec {
    pub n: usize,
    pub true_variance: f64,
    pub error_variance: f64,
    pub seed: u64,
}

impl TrueScoreSpec {
    /// Population test-retest correlation implied by the variance split.
    pub fn implied_reliability(&self) -> f64 {
        self.true_variance / (self.true_variance + self.error_variance)
    }
}

/// How an item is made to function differently across groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifKind {
    /// Constant shift of the continuous response for the focal group.
    Uniform,
    /// The focal group's common-factor contribution is scaled by
    /// `1 + magnitude`.
    Nonuniform,
}

#[derive(Debug, Clone)]
pub struct DifSimSpec {
    pub base: FactorModelSpec,
    /// Indices of items receiving DIF.
    pub dif_items: Vec<usize>,
    pub kind: DifKind,
    pub magnitude: f64,
    /// Fraction of participants assigned to the reference group.
    pub reference_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct DifData {
    /// Generated responses; `groups` holds "ref"/"focal" labels.
    pub matrix: ResponseMatrix,
    pub warnings: Vec<String>,
}

/// Independent, reproducible generator for (`seed`, `stream`). Streams of
/// the same seed never overlap, which lets callers split one seed across
/// replicates or columns without coordination.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn participant_ids(n: usize) -> Vec<String> {
    let width = n.to_string().len();
    (1..=n).map(|i| format!("p{i:0width$}")).collect()
}

fn item_ids(p: usize) -> Vec<String> {
    let width = p.to_string().len();
    (1..=p).map(|j| format!("q{j:0width$}")).collect()
}

fn validate_factor_spec(spec: &FactorModelSpec) -> Result<Vec<f64>> {
    if spec.n == 0 {
        return Err(Error::InvalidSimSpec("n must be at least 1".to_string()));
    }
    let p = spec.loadings.nrows();
    let k = spec.loadings.ncols();
    if p == 0 || k == 0 {
        return Err(Error::InvalidSimSpec(
            "loading matrix must have at least one item and one factor".to_string(),
        ));
    }
    if spec.phi.nrows() != k || spec.phi.ncols() != k {
        return Err(Error::InvalidSimSpec(format!(
            "phi is {}x{} but there are {k} factors",
            spec.phi.nrows(),
            spec.phi.ncols()
        )));
    }
    if spec.loadings.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSimSpec("non-finite loading".to_string()));
    }
    for i in 0..k {
        if (spec.phi[[i, i]] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSimSpec(format!(
                "phi diagonal entry {i} is {}, expected 1",
                spec.phi[[i, i]]
            )));
        }
        for j in 0..k {
            if (spec.phi[[i, j]] - spec.phi[[j, i]]).abs() > 1e-12 {
                return Err(Error::InvalidSimSpec("phi is not symmetric".to_string()));
            }
        }
    }
    if let Some(b) = spec.likert {
        if b.min >= b.max {
            return Err(Error::InvalidSimSpec(format!(
                "likert bounds [{}, {}] need at least two levels",
                b.min, b.max
            )));
        }
    }
    // Communality of item i under the model, diag(L phi L^T).
    let lphi = spec.loadings.dot(&spec.phi);
    let mut uniquenesses = Vec::with_capacity(p);
    for i in 0..p {
        let mut h2 = 0.0;
        for f in 0..k {
            h2 += lphi[[i, f]] * spec.loadings[[i, f]];
        }
        if h2 > 1.0 {
            return Err(Error::InvalidSimSpec(format!(
                "item {i} has communality {h2:.6} > 1; reduce its loadings"
            )));
        }
        uniquenesses.push(1.0 - h2);
    }
    Ok(uniquenesses)
}

/// Continuous common-factor and uniqueness components, before any
/// discretization or DIF injection.
fn continuous_parts(spec: &FactorModelSpec) -> Result<(Array2<f64>, Array2<f64>)> {
    let uniquenesses = validate_factor_spec(spec)?;
    let n = spec.n;
    let p = spec.loadings.nrows();
    let k = spec.loadings.ncols();

    // phi must be positive definite for correlated factor scores.
    let chol = cholesky(&spec.phi, "factor correlation matrix phi")?;
    let mut z = Array2::<f64>::zeros((n, k));
    for f in 0..k {
        let mut rng = stream_rng(spec.seed, f as u64);
        for i in 0..n {
            z[[i, f]] = rng.sample(StandardNormal);
        }
    }
    let factors = z.dot(&chol.t());
    let common = factors.dot(&spec.loadings.t());

    let mut unique = Array2::<f64>::zeros((n, p));
    for j in 0..p {
        let sd = uniquenesses[j].max(0.0).sqrt();
        let mut rng = stream_rng(spec.seed, (k + j) as u64);
        for i in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            unique[[i, j]] = sd * e;
        }
    }
    Ok((common, unique))
}

fn discretize(x: &mut Array2<f64>, bins: LikertBins) {
    let levels = (bins.max - bins.min + 1) as usize;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let thresholds: Vec<f64> = (1..levels)
        .map(|l| normal.inverse_cdf(l as f64 / levels as f64))
        .collect();
    x.mapv_inplace(|v| {
        let above = thresholds.iter().filter(|t| v > **t).count();
        (bins.min + above as i64) as f64
    });
}

/// Generate factor-structured responses.
pub fn generate_factor_data(spec: &FactorModelSpec) -> Result<ResponseMatrix> {
    let (common, unique) = continuous_parts(spec)?;
    let mut x = common + unique;
    if let Some(bins) = spec.likert {
        discretize(&mut x, bins);
    }
    ResponseMatrix::from_dense(participant_ids(spec.n), item_ids(spec.loadings.nrows()), x)
}

/// Generate two administrations sharing true scores, with independent
/// error draws. The implied test-retest correlation is
/// `true_variance / (true_variance + error_variance)`.
pub fn generate_retest_pair(spec: &TrueScoreSpec) -> Result<(ScoredTest, ScoredTest)> {
    if spec.n < 3 {
        return Err(Error::InvalidSimSpec(
            "retest generation needs at least 3 participants".to_string(),
        ));
    }
    if spec.true_variance <= 0.0 || spec.error_variance <= 0.0 {
        return Err(Error::InvalidSimSpec(format!(
            "variance components must be positive (got true {}, error {}); \
             implied reliability must lie strictly between 0 and 1",
            spec.true_variance, spec.error_variance
        )));
    }
    let ids = participant_ids(spec.n);
    let sd_t = spec.true_variance.sqrt();
    let sd_e = spec.error_variance.sqrt();
    let mut t_rng = stream_rng(spec.seed, 0);
    let truth: Vec<f64> = (0..spec.n)
        .map(|_| sd_t * t_rng.sample::<f64, _>(StandardNormal))
        .collect();
    let make = |stream: u64| -> Result<ScoredTest> {
        let mut rng = stream_rng(spec.seed, stream);
        let mut col = Array2::<f64>::zeros((spec.n, 1));
        for i in 0..spec.n {
            col[[i, 0]] = truth[i] + sd_e * rng.sample::<f64, _>(StandardNormal);
        }
        ScoredTest::from_columns_with_ids(ids.clone(), vec!["score".to_string()], col)
    };
    Ok((make(1)?, make(2)?))
}

/// Generate factor-structured responses with DIF injected on selected items.
///
/// With magnitude 0 the output values are bit-identical to
/// [`generate_factor_data`] on the base spec.
pub fn generate_dif_data(spec: &DifSimSpec) -> Result<DifData> {
    let p = spec.base.loadings.nrows();
    for &j in &spec.dif_items {
        if j >= p {
            return Err(Error::InvalidSimSpec(format!(
                "dif item index {j} out of range for {p} items"
            )));
        }
    }
    if !spec.magnitude.is_finite() {
        return Err(Error::InvalidSimSpec(
            "dif magnitude must be finite".to_string(),
        ));
    }
    if !(spec.reference_fraction > 0.0 && spec.reference_fraction < 1.0) {
        return Err(Error::InvalidSimSpec(format!(
            "reference fraction {} must lie strictly between 0 and 1",
            spec.reference_fraction
        )));
    }
    let n = spec.base.n;
    let n_ref = ((n as f64) * spec.reference_fraction).round() as usize;
    if n_ref == 0 || n_ref == n {
        return Err(Error::InvalidSimSpec(format!(
            "group split {}/{} leaves an empty group",
            n_ref,
            n - n_ref
        )));
    }

    let mut warnings = Vec::new();
    if spec.magnitude == 0.0 && !spec.dif_items.is_empty() {
        warnings.push("dif magnitude is 0; generated data matches the base model".to_string());
    }

    let (common, unique) = continuous_parts(&spec.base)?;
    let mut x = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        let focal = i >= n_ref;
        for j in 0..p {
            let is_dif = focal && spec.dif_items.contains(&j);
            x[[i, j]] = match (is_dif, spec.kind) {
                (true, DifKind::Uniform) => common[[i, j]] + unique[[i, j]] + spec.magnitude,
                (true, DifKind::Nonuniform) => {
                    common[[i, j]] * (1.0 + spec.magnitude) + unique[[i, j]]
                }
                (false, _) => common[[i, j]] + unique[[i, j]],
            };
        }
    }
    if let Some(bins) = spec.base.likert {
        discretize(&mut x, bins);
    }
    let mut matrix = ResponseMatrix::from_dense(participant_ids(n), item_ids(p), x)?;
    matrix.groups = Some(
        (0..n)
            .map(|i| if i < n_ref { "ref" } else { "focal" }.to_string())
            .collect(),
    );
    Ok(DifData { matrix, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{pearson, sample_variance};
    use ndarray::array;

    fn values(m: &ResponseMatrix) -> Vec<f64> {
        (0..m.n_participants())
            .flat_map(|i| (0..m.n_items()).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).unwrap())
            .collect()
    }

    #[test]
    fn same_seed_is_bit_identical_different_seed_is_not() {
        let spec = FactorModelSpec::simple_structure(50, 6, 2, 0.7, 99);
        let a = generate_factor_data(&spec).unwrap();
        let b = generate_factor_data(&spec).unwrap();
        assert_eq!(values(&a), values(&b));
        let other = FactorModelSpec { seed: 100, ..spec };
        let c = generate_factor_data(&other).unwrap();
        assert_ne!(values(&a), values(&c));
    }

    #[test]
    fn adding_an_item_preserves_existing_columns() {
        // Per-column sub-streams: the first six columns must not move.
        let small = FactorModelSpec::simple_structure(40, 6, 1, 0.6, 7);
        let mut wide_loadings = Array2::<f64>::zeros((7, 1));
        for j in 0..6 {
            wide_loadings[[j, 0]] = small.loadings[[j, 0]];
        }
        wide_loadings[[6, 0]] = 0.5;
        let wide = FactorModelSpec {
            n: 40,
            loadings: wide_loadings,
            phi: Array2::eye(1),
            likert: None,
            seed: 7,
        };
        let a = generate_factor_data(&small).unwrap();
        let b = generate_factor_data(&wide).unwrap();
        for i in 0..40 {
            for j in 0..6 {
                assert_eq!(a.get(i, j), b.get(i, j));
            }
        }
    }

    #[test]
    fn continuous_items_have_unit_variance_and_target_correlation() {
        // Two items on one factor at loadings 0.8: population r = 0.64.
        let mut loadings = Array2::<f64>::zeros((2, 1));
        loadings[[0, 0]] = 0.8;
        loadings[[1, 0]] = 0.8;
        let spec = FactorModelSpec {
            n: 10_000,
            loadings,
            phi: Array2::eye(1),
            likert: None,
            seed: 3,
        };
        let m = generate_factor_data(&spec).unwrap();
        let col0: Vec<f64> = (0..m.n_participants())
            .map(|i| m.get(i, 0).unwrap())
            .collect();
        let col1: Vec<f64> = (0..m.n_participants())
            .map(|i| m.get(i, 1).unwrap())
            .collect();
        assert!((sample_variance(&col0) - 1.0).abs() < 0.05);
        assert!((sample_variance(&col1) - 1.0).abs() < 0.05);
        let r = pearson(&col0, &col1).unwrap();
        assert!((r - 0.64).abs() < 0.03, "r = {r}");
    }

    #[test]
    fn correlated_factors_induce_cross_block_correlation() {
        // Loadings 0.7 on two factors at phi = 0.5: cross-block r = 0.245.
        let mut loadings = Array2::<f64>::zeros((2, 2));
        loadings[[0, 0]] = 0.7;
        loadings[[1, 1]] = 0.7;
        let spec = FactorModelSpec {
            n: 20_000,
            loadings,
            phi: array![[1.0, 0.5], [0.5, 1.0]],
            likert: None,
            seed: 11,
        };
        let m = generate_factor_data(&spec).unwrap();
        let col0: Vec<f64> = (0..m.n_participants())
            .map(|i| m.get(i, 0).unwrap())
            .collect();
        let col1: Vec<f64> = (0..m.n_participants())
            .map(|i| m.get(i, 1).unwrap())
            .collect();
        let r = pearson(&col0, &col1).unwrap();
        assert!((r - 0.245).abs() < 0.02, "r = {r}");
    }

    #[test]
    fn likert_levels_are_equiprobable() {
        let spec = FactorModelSpec {
            likert: Some(LikertBins { min: 0, max: 5 }),
            ..FactorModelSpec::simple_structure(60_000, 1, 1, 0.0, 17)
        };
        let m = generate_factor_data(&spec).unwrap();
        let mut counts = [0usize; 6];
        for i in 0..m.n_participants() {
            counts[m.get(i, 0).unwrap() as usize] += 1;
        }
        for c in counts {
            let frac = c as f64 / 60_000.0;
            assert!((frac - 1.0 / 6.0).abs() < 0.01, "level fraction {frac}");
        }
    }

    #[test]
    fn rejects_communality_above_one_and_bad_phi() {
        let mut loadings = Array2::<f64>::zeros((1, 2));
        loadings[[0, 0]] = 0.8;
        loadings[[0, 1]] = 0.7;
        let spec = FactorModelSpec {
            n: 10,
            loadings: loadings.clone(),
            phi: Array2::eye(2),
            likert: None,
            seed: 0,
        };
        assert!(matches!(
            generate_factor_data(&spec).unwrap_err(),
            Error::InvalidSimSpec(_)
        ));

        let bad_phi = FactorModelSpec {
            n: 10,
            loadings: Array2::from_elem((2, 2), 0.1),
            phi: array![[1.0, 1.2], [1.2, 1.0]],
            likert: None,
            seed: 0,
        };
        assert!(generate_factor_data(&bad_phi).is_err());
    }

    #[test]
    fn retest_pair_matches_implied_reliability() {
        let spec = TrueScoreSpec {
            n: 2000,
            true_variance: 0.8,
            error_variance: 0.2,
            seed: 21,
        };
        assert!((spec.implied_reliability() - 0.8).abs() < 1e-15);
        let (t1, t2) = generate_retest_pair(&spec).unwrap();
        assert_eq!(t1.participants, t2.participants);
        let r = pearson(&t1.totals, &t2.totals).unwrap();
        assert!((r - 0.8).abs() < 0.03, "r = {r}");
        // Administrations differ: fresh error draws.
        assert_ne!(t1.totals, t2.totals);
    }

    #[test]
    fn retest_rejects_degenerate_variances() {
        let spec = TrueScoreSpec {
            n: 100,
            true_variance: 0.0,
            error_variance: 0.5,
            seed: 1,
        };
        assert!(generate_retest_pair(&spec).is_err());
    }

    #[test]
    fn zero_magnitude_dif_reproduces_base_values() {
        let base = FactorModelSpec {
            likert: Some(LikertBins { min: 0, max: 1 }),
            ..FactorModelSpec::simple_structure(200, 8, 1, 0.6, 5)
        };
        let plain = generate_factor_data(&base).unwrap();
        let dif = generate_dif_data(&DifSimSpec {
            base: base.clone(),
            dif_items: vec![0],
            kind: DifKind::Uniform,
            magnitude: 0.0,
            reference_fraction: 0.5,
        })
        .unwrap();
        assert_eq!(values(&plain), values(&dif.matrix));
        assert_eq!(dif.warnings.len(), 1);
        let groups = dif.matrix.groups.as_ref().unwrap();
        assert_eq!(groups.iter().filter(|g| *g == "ref").count(), 100);
    }

    #[test]
    fn uniform_dif_shifts_focal_facility() {
        let base = FactorModelSpec {
            likert: Some(LikertBins { min: 0, max: 1 }),
            ..FactorModelSpec::simple_structure(20_000, 4, 1, 0.6, 13)
        };
        let dif = generate_dif_data(&DifSimSpec {
            base,
            dif_items: vec![0],
            kind: DifKind::Uniform,
            magnitude: 0.5,
            reference_fraction: 0.5,
        })
        .unwrap();
        let m = &dif.matrix;
        let groups = m.groups.as_ref().unwrap();
        let (mut ref_sum, mut ref_n, mut foc_sum, mut foc_n) = (0.0, 0, 0.0, 0);
        for (i, g) in groups.iter().enumerate() {
            let v = m.get(i, 0).unwrap();
            if g == "ref" {
                ref_sum += v;
                ref_n += 1;
            } else {
                foc_sum += v;
                foc_n += 1;
            }
        }
        let diff = foc_sum / foc_n as f64 - ref_sum / ref_n as f64;
        // Phi(0.5) - Phi(0) is about 0.19 for a unit-variance item split at 0.
        assert!((diff - 0.19).abs() < 0.03, "facility difference {diff}");
    }

    #[test]
    fn dif_spec_validation() {
        let base = FactorModelSpec::simple_structure(50, 4, 1, 0.6, 1);
        let bad_item = DifSimSpec {
            base: base.clone(),
            dif_items: vec![9],
            kind: DifKind::Uniform,
            magnitude: 0.5,
            reference_fraction: 0.5,
        };
        assert!(generate_dif_data(&bad_item).is_err());
        let bad_split = DifSimSpec {
            base,
            dif_items: vec![0],
            kind: DifKind::Uniform,
            magnitude: 0.5,
            reference_fraction: 1.0,
        };
        assert!(generate_dif_data(&bad_split).is_err());
    }
}
