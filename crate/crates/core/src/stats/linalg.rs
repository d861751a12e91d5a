//! Dense linear algebra kernels sized for item-level matrices (tens of rows, not thousands).

use ndarray::Array2;

use crate::error::{Error, Result};

/// Invert a square matrix by Gauss-Jordan elimination with partial pivoting.
///
/// `context` names the caller in the error when the matrix is singular.
pub(crate) fn invert(a: &Array2<f64>, context: &str) -> Result<Array2<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "invert requires a square matrix");
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = scale * 1e-12;

    let mut w = a.clone();
    let mut inv = Array2::<f64>::eye(n);
    for col in 0..n {
        let mut pivot_row = col;
        for r in col + 1..n {
            if w[[r, col]].abs() > w[[pivot_row, col]].abs() {
                pivot_row = r;
            }
        }
        if w[[pivot_row, col]].abs() <= tol {
            return Err(Error::Singular {
                context: context.to_string(),
            });
        }
        if pivot_row != col {
            for k in 0..n {
                w.swap([pivot_row, k], [col, k]);
                inv.swap([pivot_row, k], [col, k]);
            }
        }
        let pivot = w[[col, col]];
        for k in 0..n {
            w[[col, k]] /= pivot;
            inv[[col, k]] /= pivot;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = w[[r, col]];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                w[[r, k]] -= factor * w[[col, k]];
                inv[[r, k]] -= factor * inv[[col, k]];
            }
        }
    }
    Ok(inv)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub(crate) fn cholesky(a: &Array2<f64>, context: &str) -> Result<Array2<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky requires a square matrix");
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 1e-12 {
                    return Err(Error::NotPositiveDefinite {
                        context: context.to_string(),
                    });
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}
