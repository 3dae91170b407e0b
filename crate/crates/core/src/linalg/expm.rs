use num_complex::Complex;

use super::ComplexMatrix;
use crate::scalar::Real;

const MAX_TERMS: usize = 60;

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm<T: Real>(a: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let n = a.dim();
    let norm = a.frobenius_norm();
    let half = T::lit(0.5);
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > half {
        scaled_norm = scaled_norm * half;
        squarings += 1;
    }
    let b = a.scale_real(T::lit(0.5).powi(squarings as i32));
    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=MAX_TERMS {
        term = (&term * &b).scale(Complex::new(T::one() / T::lit(k as f64), T::zero()));
        sum = &sum + &term;
        if term.frobenius_norm() <= T::unit_roundoff() * sum.frobenius_norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cplx, re};

    #[test]
    fn diagonal_phases() {
        let h = ComplexMatrix::<f64>::from_real_diag(&[1.0, 3.0]);
        let s = 2.5;
        let u = expm(&h.scale(cplx(0.0, -s)));
        assert!((u[(0, 0)] - cplx(0.0, -s).exp()).norm() < 1e-14);
        assert!((u[(1, 1)] - cplx(0.0, -3.0 * s).exp()).norm() < 1e-13);
        assert!(u[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn nilpotent_is_exact_polynomial() {
        let n = ComplexMatrix::<f64>::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let e = expm(&n.scale(re(3.0)));
        assert!((e[(0, 1)] - re(3.0)).norm() < 1e-13);
        assert!((e[(0, 0)] - re(1.0)).norm() < 1e-14);
    }
}
