//! Statistical kernels: descriptive moments, correlations, eigendecomposition,
//! squared multiple correlations, and logistic regression.
//!
//! All variances use the n-1 sample denominator.

pub mod eigen;
pub(crate) mod linalg;
pub mod logistic;

pub use eigen::{eigen_symmetric, EigenSystem};
pub use logistic::{logistic_fit, LogisticFit};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::ScoredTest;
use crate::error::{Error, Result};

/// Correlation coefficient used throughout the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

impl CorrelationMethod {
    pub fn correlate(self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            CorrelationMethod::Pearson => pearson(x, y),
            CorrelationMethod::Spearman => spearman(x, y),
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with the n-1 denominator.
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}

pub fn sample_sd(values: &[f64]) -> f64 {
    sample_variance(values).sqrt()
}

/// Third standardized moment (population third moment over sample sd cubed).
pub fn skewness(values: &[f64]) -> f64 {
    let m = mean(values);
    let s = sample_sd(values);
    let n = values.len() as f64;
    values.iter().map(|v| ((v - m) / s).powi(3)).sum::<f64>() / n
}

/// Pearson product-moment correlation. Requires at least 3 paired values.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_paired(x, y, "pearson correlation")?;
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance {
            context: "first input to correlation".to_string(),
        });
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance {
            context: "second input to correlation".to_string(),
        });
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation; ties receive average (mid) ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_paired(x, y, "spearman correlation")?;
    pearson(&rank_average(x), &rank_average(y))
}

fn check_paired(x: &[f64], y: &[f64], context: &str) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidParam {
            param: "inputs".to_string(),
            message: format!("{context}: lengths differ ({} vs {})", x.len(), y.len()),
        });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData {
            context: context.to_string(),
            needed: 3,
            got: x.len(),
            unit: "paired observations",
        });
    }
    Ok(())
}

/// Ranks starting at 1; tied values share the average of their positions.
pub fn rank_average(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) tie; average 1-based rank.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Linear-interpolation percentile (R type 7). `p` in [0, 1].
pub fn percentile_linear(values: &[f64], p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (sorted.len() as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Item-by-item correlation matrix with exact unit diagonal and exact symmetry.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub items: Vec<String>,
    pub matrix: Array2<f64>,
    pub method: CorrelationMethod,
}

impl CorrelationMatrix {
    /// Wrap precomputed coefficients, enforcing the structural invariants.
    pub fn from_values(
        items: Vec<String>,
        matrix: Array2<f64>,
        method: CorrelationMethod,
    ) -> Result<Self> {
        let p = items.len();
        if matrix.nrows() != p || matrix.ncols() != p {
            return Err(Error::InvalidParam {
                param: "matrix".to_string(),
                message: format!(
                    "expected {p}x{p} matrix for {p} items, got {}x{}",
                    matrix.nrows(),
                    matrix.ncols()
                ),
            });
        }
        for i in 0..p {
            if (matrix[[i, i]] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParam {
                    param: "matrix".to_string(),
                    message: format!("diagonal entry {i} is {}, expected 1", matrix[[i, i]]),
                });
            }
            for j in 0..p {
                let v = matrix[[i, j]];
                if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&v) {
                    return Err(Error::InvalidParam {
                        param: "matrix".to_string(),
                        message: format!("entry [{i},{j}] = {v} outside [-1, 1]"),
                    });
                }
                let delta = (matrix[[i, j]] - matrix[[j, i]]).abs();
                if delta > 1e-12 {
                    return Err(Error::NonSymmetric {
                        row: i,
                        col: j,
                        delta,
                    });
                }
            }
        }
        Ok(CorrelationMatrix {
            items,
            matrix,
            method,
        })
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    /// Lower-triangle text rendering in the style of a printed correlation table.
    pub fn render_lower_triangle(&self) -> String {
        let width = self.items.iter().map(|s| s.len()).max().unwrap_or(1).max(6);
        let mut out = String::new();
        out.push_str(&" ".repeat(width + 1));
        for item in &self.items {
            out.push_str(&format!("{item:>width$} "));
        }
        out.push('\n');
        for (i, item) in self.items.iter().enumerate() {
            out.push_str(&format!("{item:<width$} "));
            for j in 0..=i {
                out.push_str(&format!("{:>width$.2} ", self.matrix[[i, j]]));
            }
            out.push('\n');
        }
        out
    }
}

/// Pairwise correlations between all scored item columns.
///
/// Spearman ranks each column once, then correlates ranks. A constant item
/// is reported by name rather than producing NaN.
pub fn correlation_matrix(
    scored: &ScoredTest,
    method: CorrelationMethod,
) -> Result<CorrelationMatrix> {
    let n = scored.n_participants();
    let p = scored.n_items();
    if n < 3 {
        return Err(Error::InsufficientData {
            context: "correlation matrix".to_string(),
            needed: 3,
            got: n,
            unit: "participants",
        });
    }
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let col = scored.column(j);
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::ZeroVariance {
                context: format!("item '{}'", scored.items[j]),
            });
        }
        columns.push(match method {
            CorrelationMethod::Pearson => col,
            CorrelationMethod::Spearman => rank_average(&col),
        });
    }
    let mut m = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        m[[i, i]] = 1.0;
        for j in 0..i {
            let r = pearson(&columns[i], &columns[j])?;
            m[[i, j]] = r;
            m[[j, i]] = r;
        }
    }
    Ok(CorrelationMatrix {
        items: scored.items.clone(),
        matrix: m,
        method,
    })
}

/// Squared multiple correlation of each item with all other items,
/// `1 - 1/diag(C^-1)`, clamped to [0, 1].
pub fn smc(c: &CorrelationMatrix) -> Result<Vec<f64>> {
    match smc_plain(&c.matrix) {
        Ok(values) => Ok(values),
        Err(Error::Singular { .. }) => Err(Error::Singular {
            context: "correlation matrix inversion for smc (a ridge fallback is available)"
                .to_string(),
        }),
        Err(e) => Err(e),
    }
}

/// Result of [`smc_with_fallback`]; `ridge_applied` records whether the
/// diagonal had to be regularized.
#[derive(Debug, Clone, Serialize)]
pub struct SmcEstimate {
    pub values: Vec<f64>,
    pub ridge_applied: bool,
}

/// SMC with an automatic ridge retry (1e-8 added to the diagonal) when the
/// matrix is singular. The retry is always reported via `ridge_applied`.
pub fn smc_with_fallback(c: &CorrelationMatrix) -> Result<SmcEstimate> {
    match smc_plain(&c.matrix) {
        Ok(values) => Ok(SmcEstimate {
            values,
            ridge_applied: false,
        }),
        Err(Error::Singular { .. }) => {
            let mut ridged = c.matrix.clone();
            for i in 0..ridged.nrows() {
                ridged[[i, i]] += 1e-8;
            }
            let values = smc_plain(&ridged)?;
            Ok(SmcEstimate {
                values,
                ridge_applied: true,
            })
        }
        Err(e) => Err(e),
    }
}

fn smc_plain(matrix: &Array2<f64>) -> Result<Vec<f64>> {
    let inv = linalg::invert(matrix, "correlation matrix inversion for smc")?;
    Ok((0..matrix.nrows())
        .map(|i| (1.0 - 1.0 / inv[[i, i]]).clamp(0.0, 1.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pearson_known_triple() {
        // cov((1,2,3),(1,3,2)) = 0.5 with unit sample variances.
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pearson_perfect_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 6.0, 8.0];
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let yr: Vec<f64> = y.iter().map(|v| -v).collect();
        assert!((pearson(&x, &yr).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_rejects_constant_input() {
        let err = pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance { .. }));
    }

    #[test]
    fn pearson_needs_three_pairs() {
        let err = pearson(&[1.0, 2.0], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { .. }));
    }

    #[test]
    fn mid_ranks_for_ties() {
        assert_eq!(rank_average(&[10.0, 20.0, 20.0]), vec![1.0, 2.5, 2.5]);
        assert_eq!(
            rank_average(&[5.0, 5.0, 5.0, 1.0]),
            vec![3.0, 3.0, 3.0, 1.0]
        );
    }

    #[test]
    fn spearman_tied_triple() {
        // ranks of (1,2,2) are (1, 2.5, 2.5); ranks of (2,2,1) are (2.5, 2.5, 1);
        // pearson of those rank vectors is -0.5.
        let rho = spearman(&[1.0, 2.0, 2.0], &[2.0, 2.0, 1.0]).unwrap();
        assert!((rho + 0.5).abs() < 1e-15);
    }

    #[test]
    fn spearman_equals_pearson_on_ranks() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let y = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0];
        let direct = spearman(&x, &y).unwrap();
        let via_ranks = pearson(&rank_average(&x), &rank_average(&y)).unwrap();
        assert!((direct - via_ranks).abs() < 1e-15);
    }

    #[test]
    fn spearman_monotone_transform_invariant() {
        let x: [f64; 6] = [0.3, 1.2, 2.7, 3.1, 4.9, 6.0];
        let y = [1.0, 0.8, 2.2, 2.0, 3.5, 3.0];
        let x_cubed: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        let a = spearman(&x, &y).unwrap();
        let b = spearman(&x_cubed, &y).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn percentile_linear_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile_linear(&v, 0.0), 1.0);
        assert_eq!(percentile_linear(&v, 1.0), 4.0);
        assert!((percentile_linear(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((percentile_linear(&v, 0.95) - 3.85).abs() < 1e-12);
    }

    #[test]
    fn smc_equicorrelated_closed_form() {
        // Three items with pairwise r = 0.5: every smc is 1/3.
        let m = array![[1.0, 0.5, 0.5], [0.5, 1.0, 0.5], [0.5, 0.5, 1.0]];
        let c = CorrelationMatrix::from_values(
            vec!["a".into(), "b".into(), "c".into()],
            m,
            CorrelationMethod::Pearson,
        )
        .unwrap();
        for v in smc(&c).unwrap() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn smc_singular_reports_ridge_hint_and_fallback_works() {
        // Items b and c are perfectly correlated, so the matrix is singular.
        let m = array![[1.0, 0.3, 0.3], [0.3, 1.0, 1.0], [0.3, 1.0, 1.0]];
        let c = CorrelationMatrix::from_values(
            vec!["a".into(), "b".into(), "c".into()],
            m,
            CorrelationMethod::Pearson,
        )
        .unwrap();
        let err = smc(&c).unwrap_err();
        assert!(err.to_string().contains("ridge"));
        let est = smc_with_fallback(&c).unwrap();
        assert!(est.ridge_applied);
        assert!(est.values.iter().all(|v| (0.0..=1.0).contains(v)));
        // The duplicated pair is almost perfectly predictable.
        assert!(est.values[1] > 0.99);
    }

    #[test]
    fn from_values_rejects_asymmetry_and_bad_diagonal() {
        let bad_sym = array![[1.0, 0.4], [0.3, 1.0]];
        assert!(CorrelationMatrix::from_values(
            vec!["a".into(), "b".into()],
            bad_sym,
            CorrelationMethod::Pearson
        )
        .is_err());
        let bad_diag = array![[0.9, 0.1], [0.1, 1.0]];
        assert!(CorrelationMatrix::from_values(
            vec!["a".into(), "b".into()],
            bad_diag,
            CorrelationMethod::Pearson
        )
        .is_err());
    }

    #[test]
    fn lower_triangle_rendering_places_coefficients() {
        let m = array![
            [1.0, 0.73, 0.03, 0.89],
            [0.73, 1.0, 0.20, 0.84],
            [0.03, 0.20, 1.0, -0.18],
            [0.89, 0.84, -0.18, 1.0]
        ];
        let c = CorrelationMatrix::from_values(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            m,
            CorrelationMethod::Pearson,
        )
        .unwrap();
        let text = c.render_lower_triangle();
        let row_b: &str = text.lines().find(|l| l.starts_with("b ")).unwrap();
        assert!(row_b.contains("0.73"));
        let row_d: &str = text.lines().find(|l| l.starts_with("d ")).unwrap();
        assert!(row_d.contains("-0.18"));
        // Upper triangle stays blank: row a holds only the diagonal.
        let row_a: &str = text.lines().find(|l| l.starts_with("a ")).unwrap();
        assert!(!row_a.contains("0.73"));
    }
}
