//! Exploratory factor analysis: principal components, principal axis
//! factoring, retention advice, and rotations.

pub mod extraction;
pub mod rotation;

pub use extraction::{
    advise, extract_k1, parallel_analysis, scree_data, vss, ChosenBy, ExtractionAdvice,
    ParallelAnalysis, ParallelCriterion, ScreeRow, VssRow,
};
pub use rotation::{crossloading_flags, rotate_promax, rotate_varimax, StructureFlags};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{eigen_symmetric, smc_with_fallback, CorrelationMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extraction {
    Pca,
    Paf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rotation {
    None,
    Varimax,
    Promax,
}

/// An extracted, optionally rotated, factor solution.
#[derive(Debug, Clone)]
pub struct FactorSolution {
    pub items: Vec<String>,
    pub method: Extraction,
    pub rotation: Rotation,
    /// Pattern loadings, one row per item, one column per factor. Columns
    /// are ordered by explained variance; the largest-magnitude loading in
    /// each column is positive.
    pub loadings: Array2<f64>,
    /// Communality per item. For unrotated solutions this equals the row
    /// sum of squared loadings.
    pub communalities: Vec<f64>,
    /// `1 - communality` per item.
    pub uniquenesses: Vec<f64>,
    /// All eigenvalues of the analyzed matrix, descending. For PAF this is
    /// the spectrum of the final communality-reduced matrix.
    pub eigenvalues: Vec<f64>,
    /// Factor intercorrelations; the identity until an oblique rotation.
    pub factor_correlations: Array2<f64>,
    /// Items whose communality reached 1 and was clamped during iteration.
    pub heywood_items: Vec<String>,
    /// Iterations used by iterative extraction (0 for PCA).
    pub iterations: usize,
    /// Processing notes: ridge fallback, skipped rotations, and similar.
    pub notes: Vec<String>,
}

impl FactorSolution {
    /// Wrap an externally produced loading matrix as an unrotated solution,
    /// e.g. to rotate loadings published elsewhere.
    pub fn from_loadings(items: Vec<String>, loadings: Array2<f64>) -> Result<Self> {
        if items.len() != loadings.nrows() {
            return Err(Error::InvalidParam {
                param: "loadings".to_string(),
                message: format!("{} rows for {} items", loadings.nrows(), items.len()),
            });
        }
        let communalities: Vec<f64> = loadings
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v * v).sum())
            .collect();
        let uniquenesses = communalities.iter().map(|h| 1.0 - h).collect();
        let eigenvalues = (0..loadings.ncols())
            .map(|j| loadings.column(j).iter().map(|v| v * v).sum())
            .collect();
        let k = loadings.ncols();
        Ok(FactorSolution {
            items,
            method: Extraction::Paf,
            rotation: Rotation::None,
            loadings,
            communalities,
            uniquenesses,
            eigenvalues,
            factor_correlations: Array2::eye(k),
            heywood_items: Vec::new(),
            iterations: 0,
            notes: Vec::new(),
        })
    }

    pub fn n_factors(&self) -> usize {
        self.loadings.ncols()
    }

    /// Sum of squared loadings per factor column.
    pub fn explained_variance(&self) -> Vec<f64> {
        (0..self.loadings.ncols())
            .map(|j| self.loadings.column(j).iter().map(|v| v * v).sum())
            .collect()
    }
}

/// Options for iterative principal axis factoring.
#[derive(Debug, Clone, Copy)]
pub struct PafOptions {
    pub max_iter: usize,
    /// Convergence bound on the largest communality change.
    pub tol: f64,
}

impl Default for PafOptions {
    fn default() -> Self {
        PafOptions {
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

fn check_n_factors(n_factors: usize, n_items: usize) -> Result<()> {
    if n_factors == 0 || n_factors > n_items {
        return Err(Error::InvalidParam {
            param: "n_factors".to_string(),
            message: format!("must lie in 1..={n_items}, got {n_factors}"),
        });
    }
    Ok(())
}

/// Principal component extraction: loadings are eigenvectors scaled by the
/// square roots of their eigenvalues.
pub fn pca(c: &CorrelationMatrix, n_factors: usize) -> Result<FactorSolution> {
    let p = c.n_items();
    check_n_factors(n_factors, p)?;
    let eig = eigen_symmetric(&c.matrix)?;
    let loadings = loadings_from_eigen(&eig.vectors, &eig.values, n_factors);
    let communalities: Vec<f64> = row_ssq(&loadings);
    let uniquenesses = communalities.iter().map(|h| 1.0 - h).collect();
    Ok(FactorSolution {
        items: c.items.clone(),
        method: Extraction::Pca,
        rotation: Rotation::None,
        loadings,
        communalities,
        uniquenesses,
        eigenvalues: eig.values,
        factor_correlations: Array2::eye(n_factors),
        heywood_items: Vec::new(),
        iterations: 0,
        notes: Vec::new(),
    })
}

/// Principal axis factoring with default iteration settings.
pub fn paf(c: &CorrelationMatrix, n_factors: usize) -> Result<FactorSolution> {
    paf_with(c, n_factors, &PafOptions::default())
}

/// Principal axis factoring.
///
/// Starts from squared-multiple-correlation communalities, then alternates
/// eigendecomposition of the communality-reduced matrix with communality
/// updates until the largest change falls below `tol`. A communality that
/// exceeds 1 is clamped and the item recorded in `heywood_items`.
pub fn paf_with(
    c: &CorrelationMatrix,
    n_factors: usize,
    options: &PafOptions,
) -> Result<FactorSolution> {
    let p = c.n_items();
    check_n_factors(n_factors, p)?;
    let smc = smc_with_fallback(c)?;
    let mut notes = Vec::new();
    if smc.ridge_applied {
        notes.push(
            "initial communalities used a ridge-regularized inverse (singular correlation matrix)"
                .to_string(),
        );
    }

    let mut h2 = smc.values;
    let mut heywood: Vec<usize> = Vec::new();
    let mut reduced = c.matrix.clone();
    let mut last: Option<(Array2<f64>, Vec<f64>)> = None;
    let mut iterations = 0;

    for iter in 1..=options.max_iter {
        iterations = iter;
        for i in 0..p {
            reduced[[i, i]] = h2[i];
        }
        let eig = eigen_symmetric(&reduced)?;
        let loadings = loadings_from_eigen(&eig.vectors, &eig.values, n_factors);
        let mut new_h2 = row_ssq(&loadings);
        for (i, h) in new_h2.iter_mut().enumerate() {
            if *h > 1.0 {
                *h = 1.0;
                if !heywood.contains(&i) {
                    heywood.push(i);
                }
            }
        }
        let delta = h2
            .iter()
            .zip(&new_h2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        h2 = new_h2;
        last = Some((loadings, eig.values));
        if delta < options.tol {
            let (loadings, eigenvalues) = last.unwrap();
            return Ok(finish_paf(
                c,
                loadings,
                eigenvalues,
                h2,
                heywood,
                iterations,
                notes,
                n_factors,
            ));
        }
    }

    let (loadings, eigenvalues) = last.expect("at least one iteration ran");
    let solution = finish_paf(
        c,
        loadings,
        eigenvalues,
        h2,
        heywood,
        iterations,
        notes,
        n_factors,
    );
    Err(Error::PafNotConverged {
        iterations,
        last: Box::new(solution),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish_paf(
    c: &CorrelationMatrix,
    loadings: Array2<f64>,
    eigenvalues: Vec<f64>,
    h2: Vec<f64>,
    heywood: Vec<usize>,
    iterations: usize,
    notes: Vec<String>,
    n_factors: usize,
) -> FactorSolution {
    let uniquenesses = h2.iter().map(|h| 1.0 - h).collect();
    FactorSolution {
        items: c.items.clone(),
        method: Extraction::Paf,
        rotation: Rotation::None,
        loadings,
        communalities: h2,
        uniquenesses,
        eigenvalues,
        factor_correlations: Array2::eye(n_factors),
        heywood_items: heywood.iter().map(|&i| c.items[i].clone()).collect(),
        iterations,
        notes,
    }
}

/// Loadings for the top `k` components: `v_j * sqrt(max(lambda_j, 0))`.
fn loadings_from_eigen(vectors: &Array2<f64>, values: &[f64], k: usize) -> Array2<f64> {
    let p = vectors.nrows();
    let mut loadings = Array2::<f64>::zeros((p, k));
    for j in 0..k {
        let scale = values[j].max(0.0).sqrt();
        for i in 0..p {
            loadings[[i, j]] = vectors[[i, j]] * scale;
        }
    }
    loadings
}

fn row_ssq(m: &Array2<f64>) -> Vec<f64> {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v * v).sum())
        .collect()
}

/// Tucker congruence between two loading columns,
/// `sum(xy) / sqrt(sum(x^2) sum(y^2))`.
pub fn congruence(a: &[f64], b: &[f64]) -> f64 {
    let sxy: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let sxx: f64 = a.iter().map(|x| x * x).sum();
    let syy: f64 = b.iter().map(|y| y * y).sum();
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ScoredTest;
    use crate::simulate::{generate_factor_data, FactorModelSpec};
    use crate::stats::{correlation_matrix, CorrelationMethod};
    use ndarray::array;

    fn corr_from_values(items: &[&str], m: Array2<f64>) -> CorrelationMatrix {
        CorrelationMatrix::from_values(
            items.iter().map(|s| s.to_string()).collect(),
            m,
            CorrelationMethod::Pearson,
        )
        .unwrap()
    }

    fn scored_from_sim(spec: &FactorModelSpec) -> ScoredTest {
        let m = generate_factor_data(spec).unwrap();
        let scores = Array2::from_shape_fn((m.n_participants(), m.n_items()), |(i, j)| {
            m.get(i, j).unwrap()
        });
        ScoredTest::from_columns_with_ids(m.participants.clone(), m.items.clone(), scores).unwrap()
    }

    #[test]
    fn pca_two_items_closed_form() {
        // Eigenpair (1.5, (1,1)/sqrt(2)) gives a loading of sqrt(0.75).
        let c = corr_from_values(&["a", "b"], array![[1.0, 0.5], [0.5, 1.0]]);
        let sol = pca(&c, 1).unwrap();
        let expect = 0.75f64.sqrt();
        assert!((sol.loadings[[0, 0]] - expect).abs() < 1e-12);
        assert!((sol.loadings[[1, 0]] - expect).abs() < 1e-12);
        assert!((sol.communalities[0] - 0.75).abs() < 1e-12);
        assert_eq!(sol.eigenvalues.len(), 2);
        assert!((sol.eigenvalues[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn pca_full_rank_reproduces_unit_communalities() {
        let c = corr_from_values(
            &["a", "b", "c"],
            array![[1.0, 0.4, 0.2], [0.4, 1.0, 0.3], [0.2, 0.3, 1.0]],
        );
        let sol = pca(&c, 3).unwrap();
        for h in &sol.communalities {
            assert!((h - 1.0).abs() < 1e-10);
        }
        let total: f64 = sol.eigenvalues.iter().sum();
        assert!((total - 3.0).abs() < 1e-10);
    }

    #[test]
    fn unrotated_communalities_equal_row_sums() {
        let spec = FactorModelSpec::simple_structure(300, 9, 3, 0.7, 42);
        let scored = scored_from_sim(&spec);
        let c = correlation_matrix(&scored, CorrelationMethod::Pearson).unwrap();
        for sol in [pca(&c, 3).unwrap(), paf(&c, 3).unwrap()] {
            for (i, h) in sol.communalities.iter().enumerate() {
                let row: f64 = (0..3).map(|j| sol.loadings[[i, j]].powi(2)).sum();
                assert!((row - h).abs() < 1e-10);
                assert!((sol.uniquenesses[i] - (1.0 - h)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn paf_recovers_single_factor_communalities() {
        // Loadings 0.8 imply communalities of 0.64.
        let spec = FactorModelSpec::simple_structure(1000, 6, 1, 0.8, 7);
        let scored = scored_from_sim(&spec);
        let c = correlation_matrix(&scored, CorrelationMethod::Pearson).unwrap();
        let sol = paf(&c, 1).unwrap();
        assert!(sol.iterations < 100);
        for h in &sol.communalities {
            assert!((h - 0.64).abs() < 0.05, "communality {h}");
        }
        assert!(sol.heywood_items.is_empty());
    }

    #[test]
    fn paf_flags_heywood_case() {
        // One-factor triad solution: h2 for item a is r_ab*r_ac/r_bc = 1.2.
        let c = corr_from_values(
            &["a", "b", "c"],
            array![[1.0, 0.9, 0.8], [0.9, 1.0, 0.6], [0.8, 0.6, 1.0]],
        );
        let sol = paf(&c, 1).unwrap();
        assert_eq!(sol.heywood_items, vec!["a".to_string()]);
        assert!(sol.communalities.iter().all(|h| *h <= 1.0));
    }

    #[test]
    fn near_duplicate_items_from_simulator_trigger_heywood() {
        // Two items loading 0.995 on the same factor correlate at ~0.99 and
        // push each other's communality into the bound.
        let mut loadings = Array2::<f64>::zeros((4, 2));
        loadings[[0, 0]] = 0.995;
        loadings[[1, 0]] = 0.995;
        loadings[[2, 1]] = 0.6;
        loadings[[3, 1]] = 0.6;
        let spec = FactorModelSpec {
            n: 300,
            loadings,
            phi: Array2::eye(2),
            likert: None,
            seed: 31,
        };
        let scored = scored_from_sim(&spec);
        let c = correlation_matrix(&scored, CorrelationMethod::Pearson).unwrap();
        match paf(&c, 2) {
            Ok(sol) => assert!(!sol.heywood_items.is_empty()),
            // Extreme communality estimates may instead stall the iteration;
            // the last iterate must then carry the clamped items.
            Err(Error::PafNotConverged { last, .. }) => {
                assert!(!last.heywood_items.is_empty())
            }
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_factor_counts() {
        let c = corr_from_values(&["a", "b"], array![[1.0, 0.3], [0.3, 1.0]]);
        assert!(matches!(
            pca(&c, 0).unwrap_err(),
            Error::InvalidParam { .. }
        ));
        assert!(paf(&c, 3).is_err());
    }

    #[test]
    fn congruence_of_identical_and_orthogonal_columns() {
        assert!((congruence(&[0.7, 0.6, 0.5], &[0.7, 0.6, 0.5]) - 1.0).abs() < 1e-15);
        assert!(congruence(&[1.0, 0.0], &[0.0, 1.0]).abs() < 1e-15);
        assert!((congruence(&[0.5, 0.5], &[-0.5, -0.5]) + 1.0).abs() < 1e-15);
    }
}
