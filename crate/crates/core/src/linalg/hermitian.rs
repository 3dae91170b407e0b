use num_complex::Complex;
use num_traits::Zero;

use super::{fix_phase, ComplexMatrix, EigenDecomposition, LinalgError};
use crate::scalar::{re, Real};

const MAX_SWEEPS: usize = 100;

/// Plane rotation that annihilates the (p, q) element of the Hermitian
/// 2x2 block `[[a, g], [conj(g), b]]`.
///
/// The unitary acts on columns `(p, q)` as
/// `col_p' = c col_p - conj(e) s col_q`, `col_q' = s col_p + conj(e) c col_q`
/// where `e = g / |g|`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Rotation<T> {
    pub c: T,
    pub s: T,
    pub e: Complex<T>,
}

impl<T: Real> Rotation<T> {
    pub fn annihilating(a: T, b: T, g: Complex<T>) -> Self {
        let gabs = g.norm();
        let e = g.unscale(gabs);
        let theta = (b - a) / (gabs + gabs);
        let t = if theta == T::zero() {
            T::one()
        } else {
            theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
        };
        let c = T::one() / (t * t + T::one()).sqrt();
        Self { c, s: t * c, e }
    }

    /// `M <- M U` restricted to columns p and q.
    pub fn apply_right(&self, m: &mut ComplexMatrix<T>, p: usize, q: usize) {
        let eb = self.e.conj();
        for i in 0..m.dim() {
            let xp = m[(i, p)];
            let xq = m[(i, q)];
            m[(i, p)] = xp.scale(self.c) - eb * xq.scale(self.s);
            m[(i, q)] = xp.scale(self.s) + eb * xq.scale(self.c);
        }
    }

    /// `M <- U^dagger M` restricted to rows p and q.
    pub fn apply_left_adjoint(&self, m: &mut ComplexMatrix<T>, p: usize, q: usize) {
        for j in 0..m.dim() {
            let xp = m[(p, j)];
            let xq = m[(q, j)];
            m[(p, j)] = xp.scale(self.c) - self.e * xq.scale(self.s);
            m[(q, j)] = xp.scale(self.s) + self.e * xq.scale(self.c);
        }
    }
}

/// Eigendecomposition of a Hermitian matrix by the cyclic complex Jacobi method.
///
/// Eigenvalues are returned in ascending order with zero imaginary parts and
/// the eigenvector columns are orthonormal.
pub fn eig_hermitian<T: Real>(
    a: &ComplexMatrix<T>,
    tol: T,
) -> Result<EigenDecomposition<T>, LinalgError> {
    let norm = a.frobenius_norm();
    let defect = (a - &a.adjoint()).frobenius_norm();
    if defect > tol * norm {
        return Err(LinalgError::NotHermitian {
            defect: (defect / norm).to_f64_lossy(),
        });
    }
    let n = a.dim();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    if norm == T::zero() {
        return Ok(EigenDecomposition::orthonormal(vec![Complex::zero(); n], v));
    }
    let small = T::unit_roundoff() * norm / T::lit(n as f64);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let g = m[(p, q)];
                if g.norm() <= small {
                    m[(p, q)] = Complex::zero();
                    m[(q, p)] = Complex::zero();
                    continue;
                }
                rotated = true;
                let rot = Rotation::annihilating(m[(p, p)].re, m[(q, q)].re, g);
                rot.apply_right(&mut m, p, q);
                rot.apply_left_adjoint(&mut m, p, q);
                m[(p, q)] = Complex::zero();
                m[(q, p)] = Complex::zero();
                m[(p, p)] = re(m[(p, p)].re);
                m[(q, q)] = re(m[(q, q)].re);
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

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).expect("finite"));
    let eigenvalues: Vec<_> = order.iter().map(|&i| re(m[(i, i)].re)).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = v.column(i);
        fix_phase(&mut col);
        vectors.set_column(k, &col);
    }
    Ok(EigenDecomposition::orthonormal(eigenvalues, vectors))
}

/// Unique Hermitian positive semidefinite square root.
///
/// Eigenvalues in `[-tol*||A||, 0)` are clamped to zero; anything more
/// negative is rejected.
pub fn hermitian_sqrt<T: Real>(
    a: &ComplexMatrix<T>,
    tol: T,
) -> Result<ComplexMatrix<T>, LinalgError> {
    let eig = eig_hermitian(a, tol)?;
    let norm = a.frobenius_norm();
    let n = a.dim();
    let mut roots = Vec::with_capacity(n);
    for lam in &eig.eigenvalues {
        if lam.re < -tol * norm {
            return Err(LinalgError::IndefiniteInput {
                eigenvalue: lam.re.to_f64_lossy(),
            });
        }
        roots.push(lam.re.max(T::zero()).sqrt());
    }
    let v = &eig.vectors;
    let s = ComplexMatrix::from_fn(n, |i, j| {
        (0..n).fold(Complex::zero(), |acc, k| {
            acc + v[(i, k)] * v[(j, k)].conj() * re(roots[k])
        })
    });
    Ok(s.hermitian_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    #[test]
    fn identity_has_unit_spectrum() {
        let e = eig_hermitian(&ComplexMatrix::<f64>::identity(4), 1e-10).unwrap();
        assert!(e.eigenvalues.iter().all(|z| *z == re(1.0)));
        assert!(e.vectors.approx_eq(&ComplexMatrix::identity(4), 0.0));
    }

    #[test]
    fn complex_hermitian_pair() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let a = ComplexMatrix::from_rows(vec![
            vec![re(2.0), cplx(0.0, 1.0)],
            vec![cplx(0.0, -1.0), re(2.0)],
        ])
        .unwrap();
        let e = eig_hermitian(&a, 1e-12_f64).unwrap();
        assert!((e.eigenvalues[0].re - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1].re - 3.0).abs() < 1e-14);
        for k in 0..2 {
            let v = e.vectors.column(k);
            let av = a.mul_vec(&v);
            for (x, y) in av.iter().zip(&v) {
                assert!((*x - *y * e.eigenvalues[k]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = ComplexMatrix::<f64>::from_real_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            eig_hermitian(&a, 1e-10),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn sqrt_of_diagonal() {
        let a = ComplexMatrix::<f64>::from_real_diag(&[4.0, 9.0]);
        let s = hermitian_sqrt(&a, 1e-12).unwrap();
        assert!(s.approx_eq(&ComplexMatrix::from_real_diag(&[2.0, 3.0]), 1e-15));
        let i = hermitian_sqrt(&ComplexMatrix::<f64>::identity(3), 1e-12).unwrap();
        assert!(i.approx_eq(&ComplexMatrix::identity(3), 1e-15));
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let a = ComplexMatrix::<f64>::from_real_diag(&[4.0, -1.0]);
        assert!(matches!(
            hermitian_sqrt(&a, 1e-12),
            Err(LinalgError::IndefiniteInput { .. })
        ));
    }
}
