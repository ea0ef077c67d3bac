use alloc::vec;
use alloc::vec::Vec;

use super::{pinv, sym_eigenvalues, Matrix, NumericsError, DEFAULT_PINV_TOL};
use crate::fmath;

/// Box-constrained convex quadratic program
/// `min ½ uᵀHu + fᵀu  s.t.  lb ≤ u ≤ ub`.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub h: Matrix,
    pub f: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

impl QpProblem {
    /// Validates shapes, bounds and symmetry (tolerance `1e-9` relative),
    /// then stores the symmetrised Hessian `(H + Hᵀ)/2`.
    pub fn new(h: Matrix, f: Vec<f64>, lb: Vec<f64>, ub: Vec<f64>) -> Result<Self, NumericsError> {
        let n = f.len();
        if h.rows() != n || h.cols() != n {
            return Err(NumericsError::DimensionMismatch {
                expected: (n, n),
                got: (h.rows(), h.cols()),
            });
        }
        if lb.len() != n || ub.len() != n {
            return Err(NumericsError::DimensionMismatch {
                expected: (n, 1),
                got: (lb.len(), ub.len()),
            });
        }
        if !h.is_finite()
            || !f.iter().all(|v| v.is_finite())
            || !lb.iter().all(|v| v.is_finite())
            || !ub.iter().all(|v| v.is_finite())
        {
            return Err(NumericsError::NotFinite);
        }
        if lb.iter().zip(&ub).any(|(l, u)| l > u) {
            return Err(NumericsError::BoundsInverted);
        }
        let ht = h.transpose();
        let asym = h.sub(&ht).max_abs();
        if asym > 1e-9 * h.max_abs().max(1.0) {
            return Err(NumericsError::NotSymmetric);
        }
        let h = h.add(&ht).scale(0.5);
        Ok(QpProblem { h, f, lb, ub })
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn objective(&self, u: &[f64]) -> f64 {
        0.5 * super::dot(u, &self.h.matvec(u)) + super::dot(&self.f, u)
    }
}

/// Result of a box-QP solve, carrying its KKT certificate.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub u: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Projected-gradient KKT residual: per coordinate the gradient magnitude on
/// the interior, and only the infeasible gradient direction at a bound.
pub fn kkt_residual(p: &QpProblem, u: &[f64]) -> f64 {
    let g = gradient(p, u);
    let mut res = 0.0f64;
    let tol_pos = 1e-9;
    for i in 0..u.len() {
        let at_lb = u[i] - p.lb[i] <= tol_pos * (1.0 + fmath::abs(p.lb[i]));
        let at_ub = p.ub[i] - u[i] <= tol_pos * (1.0 + fmath::abs(p.ub[i]));
        let r = if at_lb && at_ub {
            0.0 // pinned coordinate
        } else if at_lb {
            (-g[i]).max(0.0)
        } else if at_ub {
            g[i].max(0.0)
        } else {
            fmath::abs(g[i])
        };
        res = res.max(r);
    }
    res
}

fn gradient(p: &QpProblem, u: &[f64]) -> Vec<f64> {
    let mut g = p.h.matvec(u);
    for (gi, fi) in g.iter_mut().zip(&p.f) {
        *gi += fi;
    }
    g
}

#[inline]
fn project(x: &mut [f64], lb: &[f64], ub: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].max(lb[i]).min(ub[i]);
    }
}

/// Solve with the default iteration cap (5000 accelerated PG iterations
/// before the active-set polish).
pub fn solve_box_qp(p: &QpProblem) -> Result<Vec<f64>, NumericsError> {
    solve_box_qp_with(p, 5000).map(|s| s.u)
}

/// Nesterov-accelerated projected gradient descent with gradient restarts,
/// finished by an active-set polish that solves the free subsystem exactly.
pub fn solve_box_qp_with(p: &QpProblem, max_iters: usize) -> Result<QpSolution, NumericsError> {
    let n = p.dim();
    if n == 0 {
        return Err(NumericsError::EmptyMatrix);
    }
    let eigs = sym_eigenvalues(&p.h)?;
    let lam_min = eigs[0];
    let lam_max = eigs[n - 1];
    if lam_min < -1e-8 * lam_max.abs().max(1.0) {
        return Err(NumericsError::NonconvexQp);
    }

    // Degenerate linear objective: the box minimiser is a corner.
    if lam_max <= 1e-300 {
        let u = p
            .f
            .iter()
            .enumerate()
            .map(|(i, fi)| {
                if *fi > 0.0 {
                    p.lb[i]
                } else if *fi < 0.0 {
                    p.ub[i]
                } else {
                    0.0f64.max(p.lb[i]).min(p.ub[i])
                }
            })
            .collect::<Vec<_>>();
        let kkt = kkt_residual(p, &u);
        return Ok(QpSolution {
            u,
            kkt_residual: kkt,
            iterations: 0,
        });
    }

    let step = 1.0 / lam_max;
    let mut x = vec![0.0; n];
    project(&mut x, &p.lb, &p.ub);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut iters = 0;
    let target = 1e-10; // aim well below the 1e-6 contract before polishing

    for it in 0..max_iters {
        iters = it + 1;
        let g = gradient(p, &y);
        let mut x_new = y.clone();
        for i in 0..n {
            x_new[i] -= step * g[i];
        }
        project(&mut x_new, &p.lb, &p.ub);

        // Gradient restart: momentum fighting the descent direction.
        let mut restart = 0.0;
        for i in 0..n {
            restart += (y[i] - x_new[i]) * (x_new[i] - x[i]);
        }
        if restart > 0.0 {
            t = 1.0;
            y = x_new.clone();
        } else {
            let t_next = 0.5 * (1.0 + fmath::sqrt(1.0 + 4.0 * t * t));
            let beta = (t - 1.0) / t_next;
            for i in 0..n {
                y[i] = x_new[i] + beta * (x_new[i] - x[i]);
            }
            t = t_next;
        }
        x = x_new;
        if it % 8 == 0 && kkt_residual(p, &x) < target {
            break;
        }
    }

    // Active-set polish: fix bound-active coordinates, solve the remaining
    // unconstrained subsystem, iterate while the working set changes.
    let mut best = x.clone();
    let mut best_res = kkt_residual(p, &best);
    for _ in 0..30 {
        let g = gradient(p, &x);
        let mut free = Vec::new();
        for i in 0..n {
            let at_lb = x[i] - p.lb[i] <= 1e-12 * (1.0 + fmath::abs(p.lb[i]));
            let at_ub = p.ub[i] - x[i] <= 1e-12 * (1.0 + fmath::abs(p.ub[i]));
            let active = (at_lb && g[i] >= 0.0) || (at_ub && g[i] <= 0.0);
            if !active {
                free.push(i);
            }
        }
        if free.is_empty() {
            break;
        }
        let nf = free.len();
        let hff = Matrix::from_fn(nf, nf, |a, b| p.h.get(free[a], free[b]));
        let mut rhs = vec![0.0; nf];
        for (a, &i) in free.iter().enumerate() {
            let mut v = -p.f[i];
            for j in 0..n {
                if !free.contains(&j) {
                    v -= p.h.get(i, j) * x[j];
                }
            }
            rhs[a] = v;
        }
        let hinv = pinv(&hff, DEFAULT_PINV_TOL)?;
        let z = hinv.matvec(&rhs);
        let mut x_new = x.clone();
        for (a, &i) in free.iter().enumerate() {
            x_new[i] = z[a].max(p.lb[i]).min(p.ub[i]);
        }
        let res = kkt_residual(p, &x_new);
        if res < best_res {
            best_res = res;
            best = x_new.clone();
        }
        if res < 1e-12 || x_new == x {
            x = x_new;
            break;
        }
        x = x_new;
    }

    let final_res = kkt_residual(p, &x);
    if final_res < best_res {
        best = x;
        best_res = final_res;
    }
    Ok(QpSolution {
        u: best,
        kkt_residual: best_res,
        iterations: iters,
    })
}
