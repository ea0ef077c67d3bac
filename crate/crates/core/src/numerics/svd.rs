use alloc::vec;
use alloc::vec::Vec;

use super::{dot, Matrix, NumericsError};
use crate::fmath;

/// Default relative truncation tolerance for the pseudoinverse.
pub const DEFAULT_PINV_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 64;

/// Thin singular value decomposition `A = U · diag(sigma) · Vᵀ`.
///
/// `sigma` is sorted in descending order. Columns of `U` belonging to zero
/// singular values are left as zero vectors; they are never used by the
/// pseudoinverse.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

/// One-sided Jacobi SVD.
///
/// Rotations orthogonalise column pairs until every pair is orthogonal to
/// machine-level relative tolerance; singular values are the final column
/// norms. Accurate for the small/skinny matrices EDMD produces.
pub fn svd(a: &Matrix) -> Result<Svd, NumericsError> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(NumericsError::EmptyMatrix);
    }
    if !a.is_finite() {
        return Err(NumericsError::NotFinite);
    }
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        // A = U S Vᵀ  ⇔  Aᵀ = V S Uᵀ
        let t = svd_tall(&a.transpose())?;
        Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        })
    }
}

fn svd_tall(a: &Matrix) -> Result<Svd, NumericsError> {
    let m = a.rows();
    let n = a.cols();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let eps = 1e-15;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if fmath::abs(gamma) <= eps * fmath::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + fmath::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + fmath::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / fmath::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s, m);
                rotate_pair(&mut v, p, q, c, s, n);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(NumericsError::NoConvergence);
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|c| fmath::sqrt(dot(c, c))).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut u = Matrix::zeros(m, n);
    let mut vm = Matrix::zeros(n, n);
    let mut sigma = vec![0.0; n];
    for (k, &j) in order.iter().enumerate() {
        sigma[k] = norms[j];
        if norms[j] > 0.0 {
            let inv = 1.0 / norms[j];
            for i in 0..m {
                u.set(i, k, cols[j][i] * inv);
            }
        }
        for i in 0..n {
            vm.set(i, k, v[j][i]);
        }
    }
    Ok(Svd { u, sigma, v: vm })
}

#[inline]
fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64, len: usize) {
    for i in 0..len {
        let xp = cols[p][i];
        let xq = cols[q][i];
        cols[p][i] = c * xp - s * xq;
        cols[q][i] = s * xp + c * xq;
    }
}

/// Moore-Penrose pseudoinverse via SVD truncation.
///
/// Singular values at or below `tol * sigma_max` are treated as zero.
pub fn pinv(a: &Matrix, tol: f64) -> Result<Matrix, NumericsError> {
    let d = svd(a)?;
    let smax = d.sigma.first().copied().unwrap_or(0.0);
    let cut = tol.max(0.0) * smax;
    // A† = V Σ† Uᵀ, assembled as Σ†-scaled V columns times Uᵀ rows.
    let r = d.sigma.len();
    let mut vs = Matrix::zeros(a.cols(), r);
    for k in 0..r {
        if d.sigma[k] > cut && d.sigma[k] > 0.0 {
            let inv = 1.0 / d.sigma[k];
            for i in 0..a.cols() {
                vs.set(i, k, d.v.get(i, k) * inv);
            }
        }
    }
    Ok(vs.matmul(&d.u.transpose()))
}

/// Ratio of largest to smallest singular value (infinite when singular).
pub fn condition_number(a: &Matrix) -> f64 {
    match svd(a) {
        Ok(d) => {
            let smax = d.sigma.first().copied().unwrap_or(0.0);
            let smin = d.sigma.last().copied().unwrap_or(0.0);
            if smin <= 0.0 || smax <= 0.0 {
                f64::INFINITY
            } else {
                smax / smin
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Eigenvalues of a symmetric matrix via the classical two-sided Jacobi
/// iteration (values only, ascending order).
pub fn sym_eigenvalues(h: &Matrix) -> Result<Vec<f64>, NumericsError> {
    let n = h.rows();
    if n == 0 {
        return Err(NumericsError::EmptyMatrix);
    }
    if n != h.cols() {
        return Err(NumericsError::DimensionMismatch {
            expected: (n, n),
            got: (h.rows(), h.cols()),
        });
    }
    let mut a = h.clone();
    let scale = a.max_abs().max(1e-300);
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(fmath::abs(a.get(p, q)));
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if fmath::abs(apq) <= 1e-300 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + fmath::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + fmath::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / fmath::sqrt(1.0 + t * t);
                let s = c * t;
                // Two-sided rotation on rows/columns p and q.
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, c * aip - s * aiq);
                    a.set(i, q, s * aip + c * aiq);
                }
                for i in 0..n {
                    let api = a.get(p, i);
                    let aqi = a.get(q, i);
                    a.set(p, i, c * api - s * aqi);
                    a.set(q, i, s * api + c * aqi);
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eig)
}
