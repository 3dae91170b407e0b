use num_complex::Complex;
use num_traits::Zero;

use super::{ComplexMatrix, LinalgError};
use crate::scalar::Real;

/// Solves `A X = B` by LU factorization with partial pivoting.
///
/// Only an exactly zero pivot is reported as [`LinalgError::Singular`];
/// conditioning is the caller's business.
pub fn solve<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>, LinalgError> {
    let n = a.dim();
    if b.dim() != n {
        return Err(LinalgError::DimensionMismatch {
            left: n,
            right: b.dim(),
        });
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .fold(
                (k, T::zero()),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if pmax == T::zero() || !pmax.is_finite() {
            return Err(LinalgError::Singular);
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
                let tmp = x[(k, j)];
                x[(k, j)] = x[(p, j)];
                x[(p, j)] = tmp;
            }
        }
        let piv = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / piv;
            if f.is_zero() {
                continue;
            }
            lu[(i, k)] = f;
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] = lu[(i, j)] - f * u;
            }
            for j in 0..n {
                let u = x[(k, j)];
                x[(i, j)] = x[(i, j)] - f * u;
            }
        }
    }
    for j in 0..n {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in i + 1..n {
                s = s - lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    if !x.is_finite() {
        return Err(LinalgError::Singular);
    }
    Ok(x)
}

pub fn inverse<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>, LinalgError> {
    solve(a, &ComplexMatrix::identity(a.dim()))
}

/// Solves a single right-hand side.
#[allow(dead_code)]
pub(crate) fn solve_vec<T: Real>(
    a: &ComplexMatrix<T>,
    b: &[Complex<T>],
) -> Result<Vec<Complex<T>>, LinalgError> {
    let n = a.dim();
    let mut rhs = ComplexMatrix::zeros(n);
    rhs.set_column(0, b);
    Ok(solve(a, &rhs)?.column(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cplx, re};

    #[test]
    fn inverse_roundtrip() {
        let a = ComplexMatrix::from_rows(vec![
            vec![re(0.0), cplx(2.0, 1.0), re(1.0)],
            vec![re(1.0), re(1.0), cplx(0.0, 3.0)],
            vec![cplx(-1.0, 0.5), re(0.0), re(2.0)],
        ])
        .unwrap();
        let ai = inverse(&a).unwrap();
        assert!((&a * &ai).approx_eq(&ComplexMatrix::identity(3), 1e-14));
        let x = solve_vec(&a, &[re(1.0), re(2.0), re(3.0)]).unwrap();
        let back = a.mul_vec(&x);
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((*b - re(e)).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = ComplexMatrix::<f64>::from_real_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert_eq!(inverse(&a), Err(LinalgError::Singular));
    }
}
