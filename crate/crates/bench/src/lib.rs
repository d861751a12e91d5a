//! Shared fixtures for the engine benchmarks.

use psychometrics_core::data::{score, ScaleSpec, ScoredTest};
use psychometrics_core::simulate::{generate_factor_data, FactorModelSpec};
use psychometrics_core::stats::{correlation_matrix, CorrelationMatrix, CorrelationMethod};

/// Simple-structure dataset: `n` participants, `items` items in equal
/// blocks over `factors` orthogonal factors, primary loadings 0.7.
pub fn factor_dataset(n: usize, items: usize, factors: usize, seed: u64) -> ScoredTest {
    let spec = FactorModelSpec::simple_structure(n, items, factors, 0.7, seed);
    let m = generate_factor_data(&spec).expect("simulation");
    score(&m, &ScaleSpec::person(-1e9, 1e9)).expect("scoring")
}

pub fn correlations(scored: &ScoredTest) -> CorrelationMatrix {
    correlation_matrix(scored, CorrelationMethod::Pearson).expect("correlation matrix")
}
