use num_complex::Complex;
use num_traits::Zero;

use super::hermitian::Rotation;
use super::{vec_dot, vec_norm, ComplexMatrix, LinalgError};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Singular values (descending) and right singular vectors.
#[derive(Clone, Debug)]
pub struct Svd<T: std::fmt::LowerExp> {
    pub values: Vec<T>,
    /// Column `k` is the right singular vector for `values[k]`.
    pub right: ComplexMatrix<T>,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Works on `A` directly instead of `A^dagger A`, so singular values far
/// below `sqrt(eps) * ||A||` are still resolved to absolute accuracy
/// `eps * ||A||`.
pub fn svd<T: Real>(a: &ComplexMatrix<T>) -> Result<Svd<T>, LinalgError> {
    let n = a.dim();
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(n);
    let u = T::unit_roundoff();
    // columns below roundoff of the whole matrix are numerically zero;
    // rotating them only stirs noise and can cycle forever
    let negligible = (u * a.frobenius_norm()).powi(2);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let cp = w.column(p);
                let cq = w.column(q);
                let alpha = vec_norm(&cp).powi(2);
                let beta = vec_norm(&cq).powi(2);
                let gamma = vec_dot(&cp, &cq);
                if gamma.is_zero()
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.norm() <= u * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let rot = Rotation::annihilating(alpha, beta, gamma);
                rot.apply_right(&mut w, p, q);
                rot.apply_right(&mut v, p, q);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NonConvergence {
            iterations: MAX_SWEEPS,
        });
    }
    let norms: Vec<T> = (0..n).map(|j| vec_norm(&w.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite"));
    let values = order.iter().map(|&i| norms[i]).collect();
    let cols: Vec<Vec<Complex<T>>> = order.iter().map(|&i| v.column(i)).collect();
    Ok(Svd {
        values,
        right: ComplexMatrix::from_columns(&cols),
    })
}

pub fn singular_values<T: Real>(a: &ComplexMatrix<T>) -> Result<Vec<T>, LinalgError> {
    Ok(svd(a)?.values)
}

/// Number of singular values above `tol * sigma_max`.
pub fn numeric_rank<T: Real>(a: &ComplexMatrix<T>, tol: T) -> usize {
    let values = match singular_values(a) {
        Ok(v) => v,
        // Jacobi SVD converges for every finite input in practice; treat a
        // failure as full rank rather than guessing low.
        Err(_) => return a.dim(),
    };
    let smax = values.first().copied().unwrap_or_else(T::zero);
    if smax == T::zero() {
        return 0;
    }
    values.iter().filter(|&&s| s > tol * smax).count()
}

/// 2-norm condition number, capped at `1 / eps` for (numerically) singular input.
pub fn condition_number<T: Real>(a: &ComplexMatrix<T>) -> T {
    let cap = T::one() / T::unit_roundoff();
    let values = match singular_values(a) {
        Ok(v) => v,
        Err(_) => return cap,
    };
    let smax = values[0];
    let smin = values[values.len() - 1];
    if smin <= smax * T::unit_roundoff() {
        cap
    } else {
        (smax / smin).min(cap).max(T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cplx, re};

    #[test]
    fn rank_of_proportional_rows() {
        let a = ComplexMatrix::<f64>::from_real_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert_eq!(numeric_rank(&a, 1e-10), 1);
        assert_eq!(numeric_rank(&ComplexMatrix::<f64>::identity(4), 1e-10), 4);
        assert_eq!(numeric_rank(&ComplexMatrix::<f64>::zeros(3), 1e-10), 0);
    }

    #[test]
    fn singular_values_of_known_matrix() {
        // [[0, 2i], [3, 0]] has singular values 3 and 2
        let a =
            ComplexMatrix::from_rows(vec![vec![re(0.0), cplx(0.0, 2.0)], vec![re(3.0), re(0.0)]])
                .unwrap();
        let s: Vec<f64> = singular_values(&a).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-15 && (s[1] - 2.0).abs() < 1e-15);
        assert!((condition_number(&a) - 1.5_f64).abs() < 1e-14);
    }

    #[test]
    fn tiny_singular_value_resolved() {
        let a = ComplexMatrix::<f64>::from_real_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-12]])
            .unwrap();
        let s = singular_values(&a).unwrap();
        // det = 1e-12, so s_min = 1e-12 / s_max
        assert!((s[1] - 1e-12 / s[0]).abs() < 1e-15);
        assert_eq!(numeric_rank(&a, 1e-10), 1);
        assert_eq!(numeric_rank(&a, 1e-14), 2);
    }
}
