//! Logistic regression by iteratively reweighted least squares.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::linalg::invert;

const MAX_ITER: usize = 25;
const COEF_TOL: f64 = 1e-8;
const PIN_TOL: f64 = 1e-8;

/// Fitted logistic model.
#[derive(Debug, Clone, Serialize)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after each accepted step; non-decreasing.
    pub ll_trace: Vec<f64>,
}

/// Fit `P(y = 1) = logistic(x b)` by IRLS with step halving.
///
/// `x` is the full design matrix; include a column of ones for an intercept.
/// Converges when the largest coefficient update falls below 1e-8, with a
/// 25-iteration cap. Perfectly separated data is reported as an error rather
/// than returning unbounded coefficients.
pub fn logistic_fit(x: &Array2<f64>, y: &[f64]) -> Result<LogisticFit> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::InvalidParam {
            param: "y".to_string(),
            message: format!(
                "response length {} does not match {} design rows",
                y.len(),
                n
            ),
        });
    }
    if n <= p {
        return Err(Error::InsufficientData {
            context: "logistic regression".to_string(),
            needed: p + 1,
            got: n,
            unit: "observations",
        });
    }
    for &v in y {
        if v != 0.0 && v != 1.0 {
            return Err(Error::InvalidParam {
                param: "y".to_string(),
                message: format!("responses must be 0 or 1, found {v}"),
            });
        }
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::ZeroVariance {
            context: "logistic response vector".to_string(),
        });
    }

    let mut beta = Array1::<f64>::zeros(p);
    let mut ll = log_likelihood(x, y, &beta);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=MAX_ITER {
        iterations = iter;
        let eta = x.dot(&beta);
        let mu = eta.mapv(|e| 1.0 / (1.0 + (-e).exp()));

        if separated(y, mu.as_slice().unwrap()) {
            return Err(Error::Separation {
                context: "logistic regression".to_string(),
            });
        }

        // Weighted normal equations: (X^T W X) delta = X^T (y - mu).
        let w = mu.mapv(|m| (m * (1.0 - m)).max(1e-12));
        let mut xtwx = Array2::<f64>::zeros((p, p));
        let mut xtr = Array1::<f64>::zeros(p);
        for i in 0..n {
            let wi = w[i];
            let ri = y[i] - mu[i];
            for a in 0..p {
                xtr[a] += x[[i, a]] * ri;
                for b in a..p {
                    xtwx[[a, b]] += wi * x[[i, a]] * x[[i, b]];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                xtwx[[a, b]] = xtwx[[b, a]];
            }
        }
        let info_inv = invert(&xtwx, "logistic information matrix")?;
        let delta = info_inv.dot(&xtr);

        // Newton can overshoot; halve the step until the likelihood does not drop.
        let mut step = 1.0;
        let mut candidate;
        let mut cand_ll;
        loop {
            candidate = &beta + &(&delta * step);
            cand_ll = log_likelihood(x, y, &candidate);
            if cand_ll >= ll - 1e-12 || step < 1e-10 {
                break;
            }
            step *= 0.5;
        }
        let max_change = delta
            .iter()
            .map(|d| (d * step).abs())
            .fold(0.0f64, f64::max);
        beta = candidate;
        ll = cand_ll.max(ll);
        trace.push(ll);
        // Runaway coefficients on a reasonably scaled design mean separation.
        if beta.iter().any(|b| b.abs() > 1e4) {
            return Err(Error::Separation {
                context: "logistic regression".to_string(),
            });
        }
        if max_change < COEF_TOL {
            converged = true;
            break;
        }
    }

    let eta = x.dot(&beta);
    let mu = eta.mapv(|e| 1.0 / (1.0 + (-e).exp()));
    if separated(y, mu.as_slice().unwrap()) {
        return Err(Error::Separation {
            context: "logistic regression".to_string(),
        });
    }
    let w = mu.mapv(|m| (m * (1.0 - m)).max(1e-12));
    let mut xtwx = Array2::<f64>::zeros((p, p));
    for i in 0..n {
        for a in 0..p {
            for b in a..p {
                xtwx[[a, b]] += w[i] * x[[i, a]] * x[[i, b]];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtwx[[a, b]] = xtwx[[b, a]];
        }
    }
    let cov = invert(&xtwx, "logistic information matrix")?;
    let standard_errors: Vec<f64> = (0..p).map(|j| cov[[j, j]].max(0.0).sqrt()).collect();

    let fit = LogisticFit {
        coefficients: beta.to_vec(),
        standard_errors,
        log_likelihood: ll,
        iterations,
        converged,
        ll_trace: trace,
    };
    if !converged {
        return Err(Error::IrlsNotConverged {
            iterations,
            last: Box::new(fit),
        });
    }
    Ok(fit)
}

/// Overflow-safe Bernoulli log-likelihood: y*eta - log(1 + exp(eta)).
fn log_likelihood(x: &Array2<f64>, y: &[f64], beta: &Array1<f64>) -> f64 {
    let eta = x.dot(beta);
    let mut ll = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let signed = if yi == 1.0 { -eta[i] } else { eta[i] };
        // ln(1 + e^s) computed as s + ln1p(e^-s) when s > 0 to avoid overflow.
        ll -= if signed > 0.0 {
            signed + (-signed).exp().ln_1p()
        } else {
            signed.exp().ln_1p()
        };
    }
    ll
}

/// True when every fitted probability is pinned to its response.
fn separated(y: &[f64], mu: &[f64]) -> bool {
    y.iter()
        .zip(mu)
        .all(|(&yi, &mi)| (yi == 1.0 && mi > 1.0 - PIN_TOL) || (yi == 0.0 && mi < PIN_TOL))
}
