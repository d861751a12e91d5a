//! Factor retention advice: the eigenvalue-greater-than-one count, scree
//! data, very simple structure fits, and parallel analysis.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::ScoredTest;
use crate::error::{Error, Result};
use crate::simulate::stream_rng;
use crate::stats::{
    correlation_matrix, eigen_symmetric, percentile_linear, CorrelationMatrix, CorrelationMethod,
};

use super::rotation::rotate_varimax;
use super::{paf_with, FactorSolution, PafOptions};

/// Number of eigenvalues strictly greater than 1.
pub fn extract_k1(c: &CorrelationMatrix) -> Result<usize> {
    let eig = eigen_symmetric(&c.matrix)?;
    Ok(eig.values.iter().filter(|&&v| v > 1.0).count())
}

#[derive(Debug, Clone, Serialize)]
pub struct ScreeRow {
    /// 1-based component index.
    pub component: usize,
    pub eigenvalue: f64,
}

/// Eigenvalues by component index, for plotting or manual elbow reading.
pub fn scree_data(c: &CorrelationMatrix) -> Result<Vec<ScreeRow>> {
    let eig = eigen_symmetric(&c.matrix)?;
    Ok(eig
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| ScreeRow {
            component: i + 1,
            eigenvalue: v,
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct VssRow {
    pub k: usize,
    /// Fit of the complexity-one simplified solution, in [0, 1].
    pub criterion: f64,
}

/// Very simple structure criterion for 1..=max_k factors.
///
/// Each candidate solution is extracted by principal axis factoring,
/// varimax-rotated for k >= 2 so per-row maxima reflect simple structure,
/// then simplified to complexity one by keeping only the largest-magnitude
/// loading per item. The criterion compares the off-diagonal residuals of
/// the simplified model against the observed off-diagonal correlations.
pub fn vss(c: &CorrelationMatrix, max_k: usize) -> Result<Vec<VssRow>> {
    let p = c.n_items();
    if max_k == 0 || max_k > p / 2 {
        return Err(Error::InvalidParam {
            param: "max_k".to_string(),
            message: format!("must lie in 1..={} for {p} items, got {max_k}", p / 2),
        });
    }
    let mut rows = Vec::with_capacity(max_k);
    for k in 1..=max_k {
        let solution = fit_for_vss(c, k)?;
        let solution = if k >= 2 {
            rotate_varimax(&solution, true)?
        } else {
            solution
        };
        let mut simplified = solution.loadings.clone();
        for i in 0..p {
            let mut best = 0usize;
            for j in 1..k {
                if simplified[[i, j]].abs() > simplified[[i, best]].abs() {
                    best = j;
                }
            }
            for j in 0..k {
                if j != best {
                    simplified[[i, j]] = 0.0;
                }
            }
        }
        let model = simplified.dot(&simplified.t());
        let mut ss_resid = 0.0;
        let mut ss_obs = 0.0;
        let mut count = 0usize;
        for i in 0..p {
            for j in 0..p {
                if i == j {
                    continue;
                }
                let obs = c.matrix[[i, j]];
                let resid = obs - model[[i, j]];
                ss_resid += resid * resid;
                ss_obs += obs * obs;
                count += 1;
            }
        }
        let criterion = if ss_obs == 0.0 || count == 0 {
            0.0
        } else {
            (1.0 - ss_resid / ss_obs).clamp(0.0, 1.0)
        };
        rows.push(VssRow { k, criterion });
    }
    Ok(rows)
}

/// PAF fit for the VSS sweep. A non-converged candidate still carries its
/// last iterate, which is good enough for a screening criterion.
fn fit_for_vss(c: &CorrelationMatrix, k: usize) -> Result<FactorSolution> {
    match paf_with(c, k, &PafOptions::default()) {
        Ok(s) => Ok(s),
        Err(Error::PafNotConverged { last, .. }) => Ok(*last),
        Err(other) => Err(other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParallelCriterion {
    Mean,
    P95,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParallelAnalysis {
    /// Observed eigenvalues, descending.
    pub observed: Vec<f64>,
    /// Mean random eigenvalue per component across replicates.
    pub random_mean: Vec<f64>,
    /// 95th percentile random eigenvalue per component.
    pub random_p95: Vec<f64>,
    /// Components retained: the leading run where the observed eigenvalue
    /// exceeds the chosen random reference.
    pub retained: usize,
    pub criterion: ParallelCriterion,
    pub replicates: usize,
    pub seed: u64,
}

/// Horn's parallel analysis.
///
/// Compares observed eigenvalues against eigenvalues of standard-normal
/// data of the same shape. Replication r draws from an independent RNG
/// stream of `seed`, so results are reproducible and do not depend on the
/// replicate count of other runs. At least 100 replicates are required;
/// 1000 is the customary default.
pub fn parallel_analysis(
    scored: &ScoredTest,
    method: CorrelationMethod,
    replicates: usize,
    criterion: ParallelCriterion,
    seed: u64,
) -> Result<ParallelAnalysis> {
    if replicates < 100 {
        return Err(Error::InvalidParam {
            param: "replicates".to_string(),
            message: format!("parallel analysis needs at least 100 replicates, got {replicates}"),
        });
    }
    let n = scored.n_participants();
    let p = scored.n_items();
    let c = correlation_matrix(scored, method)?;
    let observed = eigen_symmetric(&c.matrix)?.values;

    // random_eigs[component][replicate]
    let mut random_eigs = vec![Vec::with_capacity(replicates); p];
    for r in 0..replicates {
        let mut rng = stream_rng(seed, r as u64);
        let data = Array2::<f64>::from_shape_fn((n, p), |_| rng.sample(StandardNormal));
        let c_rand = pearson_matrix_unchecked(&data)?;
        let values = eigen_symmetric(&c_rand)?.values;
        for (comp, v) in values.into_iter().enumerate() {
            random_eigs[comp].push(v);
        }
    }

    let random_mean: Vec<f64> = random_eigs
        .iter()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let random_p95: Vec<f64> = random_eigs
        .iter()
        .map(|v| percentile_linear(v, 0.95))
        .collect();

    let reference = match criterion {
        ParallelCriterion::Mean => &random_mean,
        ParallelCriterion::P95 => &random_p95,
    };
    let mut retained = 0;
    for (obs, rand) in observed.iter().zip(reference) {
        if obs > rand {
            retained += 1;
        } else {
            break;
        }
    }

    Ok(ParallelAnalysis {
        observed,
        random_mean,
        random_p95,
        retained,
        criterion,
        replicates,
        seed,
    })
}

/// Pearson correlation matrix of continuous random columns. Simulated
/// standard-normal data cannot be constant, so column variances are
/// trusted without naming items.
fn pearson_matrix_unchecked(data: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, p) = data.dim();
    let means: Vec<f64> = (0..p).map(|j| data.column(j).sum() / n as f64).collect();
    let mut centered = data.clone();
    for j in 0..p {
        for i in 0..n {
            centered[[i, j]] -= means[j];
        }
    }
    let norms: Vec<f64> = (0..p)
        .map(|j| centered.column(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut c = Array2::<f64>::eye(p);
    for a in 0..p {
        for b in (a + 1)..p {
            let dot: f64 = centered
                .column(a)
                .iter()
                .zip(centered.column(b).iter())
                .map(|(x, y)| x * y)
                .sum();
            let denom = norms[a] * norms[b];
            if denom == 0.0 {
                return Err(Error::ZeroVariance {
                    context: "random replicate column".to_string(),
                });
            }
            let r = (dot / denom).clamp(-1.0, 1.0);
            c[[a, b]] = r;
            c[[b, a]] = r;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChosenBy {
    ParallelAnalysis,
    Config,
}

/// Combined retention advice from all supported methods.
#[derive(Debug, Clone, Serialize)]
pub struct ExtractionAdvice {
    pub k1: usize,
    pub scree: Vec<ScreeRow>,
    pub vss: Vec<VssRow>,
    pub parallel: ParallelAnalysis,
    /// Factor count the pipeline will extract.
    pub chosen: usize,
    pub chosen_by: ChosenBy,
}

/// Run every retention method and choose a factor count. An explicit
/// `requested` count wins; otherwise the parallel analysis result is used.
pub fn advise(
    scored: &ScoredTest,
    c: &CorrelationMatrix,
    method: CorrelationMethod,
    replicates: usize,
    criterion: ParallelCriterion,
    seed: u64,
    requested: Option<usize>,
) -> Result<ExtractionAdvice> {
    let k1 = extract_k1(c)?;
    let scree = scree_data(c)?;
    let max_k = (c.n_items() / 2).max(1);
    let vss_rows = vss(c, max_k)?;
    let parallel = parallel_analysis(scored, method, replicates, criterion, seed)?;
    let (chosen, chosen_by) = match requested {
        Some(k) => (k, ChosenBy::Config),
        None => (parallel.retained, ChosenBy::ParallelAnalysis),
    };
    Ok(ExtractionAdvice {
        k1,
        scree,
        vss: vss_rows,
        parallel,
        chosen,
        chosen_by,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{generate_factor_data, FactorModelSpec};
    use ndarray::array;

    fn scored_from_sim(spec: &FactorModelSpec) -> ScoredTest {
        let m = generate_factor_data(spec).unwrap();
        let scores = Array2::from_shape_fn((m.n_participants(), m.n_items()), |(i, j)| {
            m.get(i, j).unwrap()
        });
        ScoredTest::from_columns_with_ids(m.participants.clone(), m.items.clone(), scores).unwrap()
    }

    fn corr(items: &[&str], m: Array2<f64>) -> CorrelationMatrix {
        CorrelationMatrix::from_values(
            items.iter().map(|s| s.to_string()).collect(),
            m,
            CorrelationMethod::Pearson,
        )
        .unwrap()
    }

    #[test]
    fn k1_counts_strictly_above_one() {
        // Eigenvalues 1.8, 1.0, 0.2: the exact 1.0 must not count.
        let c = corr(
            &["a", "b", "c"],
            array![[1.0, 0.8, 0.0], [0.8, 1.0, 0.0], [0.0, 0.0, 1.0]],
        );
        assert_eq!(extract_k1(&c).unwrap(), 1);
    }

    #[test]
    fn scree_rows_are_indexed_and_descending() {
        let spec = FactorModelSpec::simple_structure(200, 6, 2, 0.7, 3);
        let scored = scored_from_sim(&spec);
        let c = correlation_matrix(&scored, CorrelationMethod::Pearson).unwrap();
        let rows = scree_data(&c).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].component, 1);
        for w in rows.windows(2) {
            assert!(w[0].eigenvalue >= w[1].eigenvalue);
        }
    }

    #[test]
    fn vss_peaks_at_true_factor_count() {
        let mut hits = 0;
        for seed in 0..100 {
            let spec = FactorModelSpec::simple_structure(300, 12, 3, 0.7, 1000 + seed);
            let scored = scored_from_sim(&spec);
            let c = correlation_matrix(&scored, CorrelationMethod::Pearson).unwrap();
            let rows = vss(&c, 6).unwrap();
            let best = rows
                .iter()
                .max_by(|a, b| a.criterion.partial_cmp(&b.criterion).unwrap())
                .unwrap();
            if best.k == 3 {
                hits += 1;
            }
        }
        assert!(hits >= 90, "vss found k=3 in only {hits}/100 seeds");
    }

    #[test]
    fn vss_criterion_is_bounded() {
        let spec = FactorModelSpec::simple_structure(150, 8, 2, 0.6, 9);
        let scored = scored_from_sim(&spec);
        let c = correlation_matrix(&scored, CorrelationMethod::Pearson).unwrap();
        for row in vss(&c, 4).unwrap() {
            assert!((0.0..=1.0).contains(&row.criterion));
        }
    }

    #[test]
    fn vss_rejects_excessive_k() {
        let spec = FactorModelSpec::simple_structure(100, 6, 2, 0.6, 2);
        let scored = scored_from_sim(&spec);
        let c = correlation_matrix(&scored, CorrelationMethod::Pearson).unwrap();
        assert!(vss(&c, 4).is_err());
        assert!(vss(&c, 0).is_err());
    }

    #[test]
    fn parallel_analysis_is_deterministic_for_a_seed() {
        let spec = FactorModelSpec::simple_structure(120, 6, 2, 0.7, 17);
        let scored = scored_from_sim(&spec);
        let a = parallel_analysis(
            &scored,
            CorrelationMethod::Pearson,
            100,
            ParallelCriterion::Mean,
            5,
        )
        .unwrap();
        let b = parallel_analysis(
            &scored,
            CorrelationMethod::Pearson,
            100,
            ParallelCriterion::Mean,
            5,
        )
        .unwrap();
        assert_eq!(a.random_mean, b.random_mean);
        assert_eq!(a.random_p95, b.random_p95);
        assert_eq!(a.retained, b.retained);
        let c = parallel_analysis(
            &scored,
            CorrelationMethod::Pearson,
            100,
            ParallelCriterion::Mean,
            6,
        )
        .unwrap();
        assert_ne!(a.random_mean, c.random_mean);
    }

    #[test]
    fn parallel_analysis_retains_true_count_on_clean_structure() {
        let spec = FactorModelSpec::simple_structure(300, 12, 3, 0.7, 23);
        let scored = scored_from_sim(&spec);
        let pa = parallel_analysis(
            &scored,
            CorrelationMethod::Pearson,
            200,
            ParallelCriterion::Mean,
            11,
        )
        .unwrap();
        assert_eq!(pa.retained, 3);
        assert!(pa.random_mean[0] > 1.0);
        // p95 reference is at least the mean reference, component-wise.
        for (m, q) in pa.random_mean.iter().zip(&pa.random_p95) {
            assert!(q >= m);
        }
    }

    #[test]
    fn parallel_analysis_rejects_low_replicates() {
        let spec = FactorModelSpec::simple_structure(100, 4, 1, 0.7, 1);
        let scored = scored_from_sim(&spec);
        assert!(matches!(
            parallel_analysis(
                &scored,
                CorrelationMethod::Pearson,
                99,
                ParallelCriterion::Mean,
                1
            )
            .unwrap_err(),
            Error::InvalidParam { .. }
        ));
    }

    #[test]
    fn advise_prefers_explicit_request_over_parallel() {
        let spec = FactorModelSpec::simple_structure(150, 8, 2, 0.7, 13);
        let scored = scored_from_sim(&spec);
        let c = correlation_matrix(&scored, CorrelationMethod::Pearson).unwrap();
        let auto = advise(
            &scored,
            &c,
            CorrelationMethod::Pearson,
            100,
            ParallelCriterion::Mean,
            3,
            None,
        )
        .unwrap();
        assert_eq!(auto.chosen, auto.parallel.retained);
        assert_eq!(auto.chosen_by, ChosenBy::ParallelAnalysis);
        let forced = advise(
            &scored,
            &c,
            CorrelationMethod::Pearson,
            100,
            ParallelCriterion::Mean,
            3,
            Some(1),
        )
        .unwrap();
        assert_eq!(forced.chosen, 1);
        assert_eq!(forced.chosen_by, ChosenBy::Config);
    }
}
