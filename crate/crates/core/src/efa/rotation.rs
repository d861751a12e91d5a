//! Factor rotations: orthogonal varimax, oblique promax, and simple
//! structure diagnostics.

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::linalg::invert;

use super::{FactorSolution, Rotation};

/// Sweep cap for the pairwise varimax iteration. Each pairwise rotation is
/// the exact maximizer for its plane, so the criterion is nondecreasing and
/// the cap exists only as a safety net.
const MAX_VARIMAX_SWEEPS: usize = 500;
const VARIMAX_GAIN_TOL: f64 = 1e-10;

/// Raw varimax criterion: summed column variances of squared loadings.
fn varimax_criterion(loadings: &Array2<f64>) -> f64 {
    let p = loadings.nrows() as f64;
    (0..loadings.ncols())
        .map(|j| {
            let col = loadings.column(j);
            let m4: f64 = col.iter().map(|v| v.powi(4)).sum::<f64>() / p;
            let m2: f64 = col.iter().map(|v| v * v).sum::<f64>() / p;
            m4 - m2 * m2
        })
        .sum()
}

/// Varimax rotation by pairwise plane rotations.
///
/// With `kaiser_normalize` the rows are scaled to unit communality before
/// rotation and restored afterwards, so low-communality items do not
/// dominate the criterion. Sweeps stop once a full pass improves the
/// criterion by less than 1e-10. A single-factor solution is returned
/// unchanged with an explanatory note.
pub fn rotate_varimax(solution: &FactorSolution, kaiser_normalize: bool) -> Result<FactorSolution> {
    if solution.rotation != Rotation::None {
        return Err(Error::InvalidParam {
            param: "solution".to_string(),
            message: "varimax requires an unrotated solution".to_string(),
        });
    }
    let k = solution.loadings.ncols();
    if k < 2 {
        let mut out = solution.clone();
        out.notes
            .push("varimax skipped: a single factor cannot be rotated".to_string());
        return Ok(out);
    }

    let p = solution.loadings.nrows();
    let mut x = solution.loadings.clone();
    let mut weights = vec![1.0; p];
    if kaiser_normalize {
        for i in 0..p {
            let h: f64 = (0..k).map(|j| x[[i, j]].powi(2)).sum::<f64>().sqrt();
            // Rows with no common variance carry no information for the
            // rotation; leave them unscaled instead of dividing by zero.
            if h > 1e-12 {
                weights[i] = h;
                for j in 0..k {
                    x[[i, j]] /= h;
                }
            }
        }
    }

    let mut criterion = varimax_criterion(&x);
    for _sweep in 0..MAX_VARIMAX_SWEEPS {
        for a in 0..k - 1 {
            for b in a + 1..k {
                rotate_pair(&mut x, a, b);
            }
        }
        let next = varimax_criterion(&x);
        let gain = next - criterion;
        criterion = next;
        if gain < VARIMAX_GAIN_TOL {
            break;
        }
    }

    if kaiser_normalize {
        for i in 0..p {
            for j in 0..k {
                x[[i, j]] *= weights[i];
            }
        }
    }

    let mut phi = Array2::eye(k);
    canonicalize(&mut x, &mut phi);

    let mut out = solution.clone();
    out.loadings = x;
    out.factor_correlations = phi;
    out.rotation = Rotation::Varimax;
    Ok(out)
}

/// One optimal plane rotation of columns `a` and `b` (Kaiser's angle,
/// `tan 4t = (D - 2AB/p) / (C - (A^2 - B^2)/p)`).
fn rotate_pair(x: &mut Array2<f64>, a: usize, b: usize) {
    let p = x.nrows();
    let pf = p as f64;
    let (mut sa, mut sb, mut sc, mut sd) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..p {
        let u = x[[i, a]] * x[[i, a]] - x[[i, b]] * x[[i, b]];
        let v = 2.0 * x[[i, a]] * x[[i, b]];
        sa += u;
        sb += v;
        sc += u * u - v * v;
        sd += 2.0 * u * v;
    }
    let num = sd - 2.0 * sa * sb / pf;
    let den = sc - (sa * sa - sb * sb) / pf;
    if num.abs() < 1e-15 && den.abs() < 1e-15 {
        return;
    }
    let theta = 0.25 * num.atan2(den);
    if theta.abs() < 1e-15 {
        return;
    }
    let (s, c) = theta.sin_cos();
    for i in 0..p {
        let va = x[[i, a]];
        let vb = x[[i, b]];
        x[[i, a]] = c * va + s * vb;
        x[[i, b]] = -s * va + c * vb;
    }
}

/// Promax rotation.
///
/// Runs a Kaiser-normalized varimax first, builds the element-wise power
/// target `sign(a) * |a|^power`, and solves for the oblique transform by
/// least squares. The transform is rescaled so the implied factor
/// correlation matrix has a unit diagonal. `power` must be at least 2;
/// 4 is the customary default.
pub fn rotate_promax(solution: &FactorSolution, power: u32) -> Result<FactorSolution> {
    if power < 2 {
        return Err(Error::InvalidParam {
            param: "power".to_string(),
            message: format!("promax power must be >= 2, got {power}"),
        });
    }
    let k = solution.loadings.ncols();
    if k < 2 {
        let mut out = solution.clone();
        out.notes
            .push("promax skipped: a single factor cannot be rotated".to_string());
        return Ok(out);
    }

    let varimax = rotate_varimax(solution, true)?;
    let a = &varimax.loadings;
    let p = a.nrows();

    // Target with the same signs but more contrast between large and small
    // loadings.
    let mut target = Array2::<f64>::zeros((p, k));
    for i in 0..p {
        for j in 0..k {
            let v = a[[i, j]];
            target[[i, j]] = v.signum() * v.abs().powi(power as i32);
        }
    }

    // Least-squares transform U = (A'A)^-1 A'Q.
    let ata = a.t().dot(a);
    let ata_inv = invert(&ata, "varimax loading cross-product")?;
    let mut u = ata_inv.dot(&a.t().dot(&target));

    // Rescale columns of U so diag((U'U)^-1) = 1, which makes the factor
    // correlation matrix a true correlation matrix.
    let utu = u.t().dot(&u);
    let utu_inv = invert(&utu, "promax transform cross-product")?;
    for j in 0..k {
        let d = utu_inv[[j, j]].sqrt();
        for i in 0..k {
            u[[i, j]] *= d;
        }
    }

    let mut pattern = a.dot(&u);
    let u_inv = invert(&u, "promax transform")?;
    let mut phi = u_inv.dot(&u_inv.t());
    canonicalize(&mut pattern, &mut phi);

    let mut out = solution.clone();
    out.loadings = pattern;
    out.factor_correlations = phi;
    out.rotation = Rotation::Promax;
    Ok(out)
}

/// Canonical form shared by all rotations: columns ordered by descending
/// sum of squared loadings, and each column flipped so its largest-magnitude
/// entry is positive. The factor correlation matrix is permuted and
/// sign-flipped to match.
pub(crate) fn canonicalize(loadings: &mut Array2<f64>, phi: &mut Array2<f64>) {
    let k = loadings.ncols();
    let mut order: Vec<usize> = (0..k).collect();
    let ssq: Vec<f64> = (0..k)
        .map(|j| loadings.column(j).iter().map(|v| v * v).sum())
        .collect();
    order.sort_by(|&a, &b| ssq[b].partial_cmp(&ssq[a]).unwrap());

    let mut signs = vec![1.0; k];
    for (new_j, &old_j) in order.iter().enumerate() {
        let col = loadings.column(old_j);
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            signs[new_j] = -1.0;
        }
    }

    let old_loadings = loadings.clone();
    let old_phi = phi.clone();
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..loadings.nrows() {
            loadings[[i, new_j]] = signs[new_j] * old_loadings[[i, old_j]];
        }
    }
    for (nj, &oj) in order.iter().enumerate() {
        for (ni, &oi) in order.iter().enumerate() {
            phi[[ni, nj]] = signs[ni] * signs[nj] * old_phi[[oi, oj]];
        }
    }
}

/// Simple structure diagnostics at a loading threshold.
#[derive(Debug, Clone, Serialize)]
pub struct StructureFlags {
    pub threshold: f64,
    /// Items with salient loadings on two or more factors.
    pub crossloading_items: Vec<String>,
    /// Items with no salient loading on any factor.
    pub orphan_items: Vec<String>,
    /// Factor indices (0-based) with fewer than three salient items.
    pub underidentified_factors: Vec<usize>,
}

/// Flag crossloading items, orphan items, and factors with fewer than
/// three salient indicators. The customary salience threshold is 0.32.
pub fn crossloading_flags(solution: &FactorSolution, threshold: f64) -> StructureFlags {
    let (p, k) = (solution.loadings.nrows(), solution.loadings.ncols());
    let mut crossloading = Vec::new();
    let mut orphans = Vec::new();
    let mut per_factor = vec![0usize; k];
    for i in 0..p {
        let mut salient = 0usize;
        for (j, count) in per_factor.iter_mut().enumerate() {
            if solution.loadings[[i, j]].abs() >= threshold {
                salient += 1;
                *count += 1;
            }
        }
        match salient {
            0 => orphans.push(solution.items[i].clone()),
            1 => {}
            _ => crossloading.push(solution.items[i].clone()),
        }
    }
    let underidentified = per_factor
        .iter()
        .enumerate()
        .filter(|(_, &count)| count < 3)
        .map(|(j, _)| j)
        .collect();
    StructureFlags {
        threshold,
        crossloading_items: crossloading,
        orphan_items: orphans,
        underidentified_factors: underidentified,
    }
}
