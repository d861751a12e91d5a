//! Symmetric eigendecomposition by the cyclic Jacobi method.
//!
//! Correlation matrices in this engine stay small (one row per item), where
//! Jacobi is simple, unconditionally stable, and accurate to machine
//! precision in both eigenvalues and eigenvectors.

use ndarray::Array2;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigendecomposition of a symmetric matrix `A = V diag(values) V^T`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors; column `j` pairs with `values[j]`.
    pub vectors: Array2<f64>,
}

/// Decompose a symmetric matrix with cyclic Jacobi rotations.
///
/// Input must be symmetric to within 1e-12 (scaled by the largest entry).
/// Eigenvector signs are canonical: the component of largest magnitude in
/// each column is non-negative, so repeated runs are bit-identical.
pub fn eigen_symmetric(a: &Array2<f64>) -> Result<EigenSystem> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidParam {
            param: "matrix".to_string(),
            message: format!("expected square matrix, got {}x{}", n, a.ncols()),
        });
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            let delta = (a[[i, j]] - a[[j, i]]).abs();
            if delta > SYMMETRY_TOL * scale {
                return Err(Error::NonSymmetric {
                    row: i,
                    col: j,
                    delta,
                });
            }
        }
    }

    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    if n > 1 {
        let fro: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
        let target = (fro * 1e-14).max(f64::MIN_POSITIVE);
        let mut converged = false;
        for _sweep in 0..MAX_SWEEPS {
            let off: f64 = off_diagonal_norm(&m);
            if off <= target {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
        if !converged && off_diagonal_norm(&m) > target {
            return Err(Error::JacobiNotConverged { sweeps: MAX_SWEEPS });
        }
    }

    // Sort descending by eigenvalue, then fix each eigenvector's sign.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].partial_cmp(&m[[i, i]]).unwrap());
    let mut values = Vec::with_capacity(n);
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        values.push(m[[src, src]]);
        let mut peak = 0usize;
        for r in 1..n {
            if v[[r, src]].abs() > v[[peak, src]].abs() {
                peak = r;
            }
        }
        let sign = if v[[peak, src]] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[[r, dst]] = sign * v[[r, src]];
        }
    }
    Ok(EigenSystem { values, vectors })
}

fn off_diagonal_norm(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += 2.0 * m[[i, j]] * m[[i, j]];
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation in the (p, q) plane, annihilating m[p][q].
fn rotate(m: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize) {
    let apq = m[[p, q]];
    if apq == 0.0 {
        return;
    }
    let tau = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        1.0 / (tau - (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = m.nrows();
    for k in 0..n {
        let mkp = m[[k, p]];
        let mkq = m[[k, q]];
        m[[k, p]] = c * mkp - s * mkq;
        m[[k, q]] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[[p, k]];
        let mqk = m[[q, k]];
        m[[p, k]] = c * mpk - s * mqk;
        m[[q, k]] = s * mpk + c * mqk;
    }
    m[[p, q]] = 0.0;
    m[[q, p]] = 0.0;
    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn reconstruct(e: &EigenSystem) -> Array2<f64> {
        let n = e.values.len();
        let mut lambda = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            lambda[[i, i]] = e.values[i];
        }
        e.vectors.dot(&lambda).dot(&e.vectors.t())
    }

    #[test]
    fn two_by_two_closed_form() {
        // Eigenvalues of [[1, r], [r, 1]] are 1 + r and 1 - r.
        let r = 0.5;
        let e = eigen_symmetric(&array![[1.0, r], [r, 1.0]]).unwrap();
        assert!((e.values[0] - 1.5).abs() < 1e-14);
        assert!((e.values[1] - 0.5).abs() < 1e-14);
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((e.vectors[[0, 0]] - inv_sqrt2).abs() < 1e-12);
        assert!((e.vectors[[1, 0]] - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn diagonal_matrix_sorted_descending() {
        let e =
            eigen_symmetric(&array![[2.0, 0.0, 0.0], [0.0, 5.0, 0.0], [0.0, 0.0, 3.0]]).unwrap();
        assert_eq!(e.values, vec![5.0, 3.0, 2.0]);
        assert_eq!(e.vectors[[1, 0]], 1.0);
        assert_eq!(e.vectors[[2, 1]], 1.0);
        assert_eq!(e.vectors[[0, 2]], 1.0);
    }

    #[test]
    fn reconstruction_orthonormality_and_trace() {
        // Fixed symmetric matrix with mixed magnitudes.
        let a = array![
            [1.0, 0.73, 0.03, 0.89],
            [0.73, 1.0, 0.20, 0.84],
            [0.03, 0.20, 1.0, -0.18],
            [0.89, 0.84, -0.18, 1.0]
        ];
        let e = eigen_symmetric(&a).unwrap();
        let back = reconstruct(&e);
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[[i, j]] - a[[i, j]]).abs() < 1e-8);
            }
        }
        let vtv = e.vectors.t().dot(&e.vectors);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((vtv[[i, j]] - expect).abs() < 1e-8);
            }
        }
        let trace: f64 = (0..4).map(|i| a[[i, i]]).sum();
        let sum: f64 = e.values.iter().sum();
        assert!((sum - trace).abs() < 1e-8);
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn reduced_diagonal_input_is_fine() {
        // Communality-reduced matrices have sub-unit diagonals and may be indefinite.
        let a = array![[0.5, 0.73], [0.73, 0.4]];
        let e = eigen_symmetric(&a).unwrap();
        assert!(e.values[1] < 0.0);
        let back = reconstruct(&e);
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[[i, j]] - a[[i, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_symmetric() {
        let err = eigen_symmetric(&array![[1.0, 0.3], [0.2, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NonSymmetric { .. }));
    }

    #[test]
    fn one_by_one() {
        let e = eigen_symmetric(&array![[4.2]]).unwrap();
        assert_eq!(e.values, vec![4.2]);
        assert_eq!(e.vectors[[0, 0]], 1.0);
    }
}
