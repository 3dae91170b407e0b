//! Dense complex linear algebra sized for small systems (N up to a few dozen).
//!
//! Everything here is written against [`Real`](crate::scalar::Real), so the
//! same kernels run in `f32`, `f64` and double-double precision.

mod eigen;
mod expm;
mod hermitian;
mod lu;
mod matrix;
mod spectrum;
mod svd;

pub use eigen::{eig_general, EigenDecomposition};
pub use expm::expm;
pub use hermitian::{eig_hermitian, hermitian_sqrt};
pub use lu::{inverse, solve};
pub use matrix::{vec_dot, vec_norm, ComplexMatrix};
pub use spectrum::{classify_spectrum, SpectrumClass, SpectrumKind};
pub use svd::{condition_number, numeric_rank, singular_values, Svd};

use thiserror::Error;

/// Default relative tolerance for residual-type checks.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default relative tolerance for spectrum classification.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;

/// [`DEFAULT_TOL`] floored at a few hundred ulps of `T`, so the default
/// stays attainable in single precision.
pub fn default_tol<T: crate::scalar::Real>() -> T {
    T::lit(DEFAULT_TOL).max(T::unit_roundoff() * T::lit(512.0))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix has no rows")]
    Empty,
    #[error("row {row} has {len} entries, expected {rows}")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("matrix is not Hermitian (relative defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is indefinite (eigenvalue {eigenvalue:e})")]
    IndefiniteInput { eigenvalue: f64 },
    #[error("matrix is singular")]
    Singular,
}

/// Puts a unit vector into the canonical phase: the first component of
/// (numerically) largest modulus becomes real and nonnegative.
pub(crate) fn fix_phase<T: crate::scalar::Real>(v: &mut [num_complex::Complex<T>]) {
    let norm = vec_norm(v);
    if norm == T::zero() {
        return;
    }
    for z in v.iter_mut() {
        *z = z.unscale(norm);
    }
    let amax = v.iter().fold(T::zero(), |acc, z| acc.max(z.norm()));
    let cut = amax * (T::one() - T::lit(1e3) * T::unit_roundoff());
    if let Some(pivot) = v.iter().copied().find(|z| z.norm() >= cut) {
        let phase = pivot.conj().unscale(pivot.norm());
        for z in v.iter_mut() {
            *z = *z * phase;
        }
    }
}
