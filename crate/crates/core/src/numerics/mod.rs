//! Dense linear-algebra kernel shared by identification and control:
//! row-major matrices, an SVD-based Moore-Penrose pseudoinverse and a
//! box-constrained convex QP solver.

mod matrix;
mod qp;
mod svd;

pub use matrix::Matrix;
pub use qp::{kkt_residual, solve_box_qp, solve_box_qp_with, QpProblem, QpSolution};
pub use svd::{condition_number, pinv, svd, sym_eigenvalues, Svd, DEFAULT_PINV_TOL};

use core::fmt;

/// Errors produced by the numerics kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum NumericsError {
    /// A matrix with zero rows or columns was passed where data is required.
    EmptyMatrix,
    /// Operand shapes are incompatible.
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// A NaN or infinity showed up in the inputs.
    NotFinite,
    /// The QP Hessian is not symmetric positive semidefinite.
    NonconvexQp,
    /// The QP Hessian is not symmetric within tolerance.
    NotSymmetric,
    /// Lower bound exceeds upper bound somewhere.
    BoundsInverted,
    /// Jacobi sweeps did not converge (pathological input).
    NoConvergence,
}

impl fmt::Display for NumericsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericsError::EmptyMatrix => write!(f, "empty matrix"),
            NumericsError::DimensionMismatch { expected, got } => write!(
                f,
                "dimension mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            NumericsError::NotFinite => write!(f, "non-finite value in input"),
            NumericsError::NonconvexQp => write!(f, "nonconvex QP"),
            NumericsError::NotSymmetric => write!(f, "Hessian not symmetric"),
            NumericsError::BoundsInverted => write!(f, "lower bound exceeds upper bound"),
            NumericsError::NoConvergence => write!(f, "iteration did not converge"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NumericsError {}

/// Dot product of two equally sized slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Euclidean norm of a slice.
#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    crate::fmath::sqrt(dot(x, x))
}

/// Largest absolute entry of a slice (0 for empty input).
#[inline]
pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(crate::fmath::abs(*v)))
}
