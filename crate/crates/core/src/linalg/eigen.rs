//! General (non-normal) eigensolver: Householder reduction to Hessenberg
//! form followed by the explicitly shifted complex QR iteration with
//! Wilkinson shifts.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::svd::{condition_number, svd};
use super::{fix_phase, vec_norm, ComplexMatrix, LinalgError};
use crate::scalar::{re, Real};

/// Iterations allowed per eigenvalue before giving up.
const ITERS_PER_EIGENVALUE: usize = 40;

/// Eigenvalue clusters within `CLUSTER_SCALE * ||A|| * eps^(1/m)` of their
/// centroid are indistinguishable from an m-fold defective eigenvalue.
const CLUSTER_SCALE: f64 = 2.0;
/// Upper bound on `sigma_min / sigma_max` of a cluster's eigenvectors for the
/// cluster to count as defective (nearly parallel eigenvectors).
const DEFECTIVE_VECTOR_RATIO: f64 = 1e-4;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct EigenDecomposition<T: std::fmt::LowerExp> {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex<T>>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub vectors: ComplexMatrix<T>,
    /// 2-norm condition number of `vectors`.
    pub condition: T,
    /// `condition >= 1 / tol`: the input is (numerically) non-diagonalizable.
    pub defective: bool,
}

impl<T: Real> EigenDecomposition<T> {
    pub(crate) fn orthonormal(eigenvalues: Vec<Complex<T>>, vectors: ComplexMatrix<T>) -> Self {
        Self {
            eigenvalues,
            vectors,
            condition: T::one(),
            defective: false,
        }
    }

    /// Largest `||A v_k - lambda_k v_k||` over all pairs.
    pub fn max_residual(&self, a: &ComplexMatrix<T>) -> T {
        (0..self.eigenvalues.len())
            .map(|k| {
                let v = self.vectors.column(k);
                let av = a.mul_vec(&v);
                let r: Vec<_> = av
                    .iter()
                    .zip(&v)
                    .map(|(&x, &y)| x - y * self.eigenvalues[k])
                    .collect();
                vec_norm(&r)
            })
            .fold(T::zero(), T::max)
    }

    /// Smallest pairwise distance between eigenvalues (zero for N = 1).
    pub fn min_gap(&self) -> T {
        let e = &self.eigenvalues;
        let mut gap = T::infinity();
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                gap = gap.min((e[i] - e[j]).norm());
            }
        }
        if gap.is_infinite() {
            T::zero()
        } else {
            gap
        }
    }
}

/// Eigendecomposition of an arbitrary square matrix.
///
/// Defective input (an exceptional point) is not an error: clusters that
/// are numerically indistinguishable from a Jordan block are collapsed to
/// their centroid, share one eigenvector, and the decomposition is flagged
/// through `condition` and `defective`.
pub fn eig_general<T: Real>(
    a: &ComplexMatrix<T>,
    tol: T,
) -> Result<EigenDecomposition<T>, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.dim();
    let (mut h, mut z) = hessenberg(a);
    schur_qr(&mut h, &mut z)?;

    let mut pairs: Vec<(Complex<T>, Vec<Complex<T>>)> = (0..n)
        .map(|k| (h[(k, k)], z.mul_vec(&triangular_eigvec(&h, k))))
        .collect();
    for (_, v) in pairs.iter_mut() {
        fix_phase(v);
    }
    pairs.sort_by(|x, y| {
        x.0.re
            .partial_cmp(&y.0.re)
            .expect("finite")
            .then(x.0.im.partial_cmp(&y.0.im).expect("finite"))
    });
    let mut eigenvalues: Vec<_> = pairs.iter().map(|p| p.0).collect();
    let mut vectors =
        ComplexMatrix::from_columns(&pairs.into_iter().map(|p| p.1).collect::<Vec<_>>());

    collapse_defective_clusters(a, &mut eigenvalues, &mut vectors)?;

    let condition = condition_number(&vectors);
    Ok(EigenDecomposition {
        defective: condition * tol >= T::one(),
        eigenvalues,
        vectors,
        condition,
    })
}

/// Householder reduction `A = Q H Q^dagger`; returns `(H, Q)`.
fn hessenberg<T: Real>(a: &ComplexMatrix<T>) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
    let n = a.dim();
    let mut h = a.clone();
    let mut q = ComplexMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex<T>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = vec_norm(&x);
        if xnorm == T::zero() {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.is_zero() {
            Complex::new(T::one(), T::zero())
        } else {
            x0.unscale(x0.norm())
        };
        // v = x + phase * |x| e1, reflector P = I - 2 v v^dagger / (v^dagger v)
        let mut v = x;
        v[0] = v[0] + phase.scale(xnorm);
        let vnorm2 = vec_norm(&v).powi(2);
        if vnorm2 == T::zero() {
            continue;
        }
        let two_over = T::lit(2.0) / vnorm2;
        // H <- P H
        for j in 0..n {
            let s = (k + 1..n).fold(Complex::zero(), |acc, i| {
                acc + v[i - k - 1].conj() * h[(i, j)]
            });
            let s = s.scale(two_over);
            for i in k + 1..n {
                h[(i, j)] = h[(i, j)] - v[i - k - 1] * s;
            }
        }
        // H <- H P, Q <- Q P
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let s = (k + 1..n).fold(Complex::zero(), |acc, j| acc + m[(i, j)] * v[j - k - 1]);
                let s = s.scale(two_over);
                for j in k + 1..n {
                    m[(i, j)] = m[(i, j)] - s * v[j - k - 1].conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Complex::zero();
        }
    }
    (h, q)
}

/// Givens rotation `G = [[c, s], [-conj(s), c]]` with `G [a; b] = [r; 0]`.
fn givens<T: Real>(a: Complex<T>, b: Complex<T>) -> (T, Complex<T>) {
    if b.is_zero() {
        return (T::one(), Complex::zero());
    }
    if a.is_zero() {
        return (T::zero(), b.conj().unscale(b.norm()));
    }
    let an = a.norm();
    let r = an.hypot(b.norm());
    let c = an / r;
    let s = a.unscale(an) * b.conj().unscale(r);
    (c, s)
}

/// Eigenvalue of the 2x2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    c: Complex<T>,
    d: Complex<T>,
) -> Complex<T> {
    let half = T::lit(0.5);
    let m = (a + d).scale(half);
    let disc = ((a - d).scale(half).powi(2) + b * c).sqrt();
    let l1 = m + disc;
    let l2 = m - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Reduces the Hessenberg matrix `h` to upper-triangular Schur form in
/// place, accumulating the unitary transformations into `z`.
fn schur_qr<T: Real>(
    h: &mut ComplexMatrix<T>,
    z: &mut ComplexMatrix<T>,
) -> Result<(), LinalgError> {
    let n = h.dim();
    if n < 2 {
        return Ok(());
    }
    let u = T::unit_roundoff();
    let norm = h.frobenius_norm();
    let budget = ITERS_PER_EIGENVALUE * n;
    let mut total = 0usize;
    let mut hi = n - 1;
    let mut iter = 0usize;
    while hi > 0 {
        // locate the start of the unreduced block ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let scale = if diag == T::zero() { norm } else { diag };
            if sub <= u * scale {
                h[(lo, lo - 1)] = Complex::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        if hi == lo + 1 {
            two_by_two(h, z, lo);
            hi = lo.saturating_sub(1);
            if lo == 0 {
                break;
            }
            iter = 0;
            continue;
        }
        total += 1;
        iter += 1;
        if total > budget {
            return Err(LinalgError::NonConvergence { iterations: total });
        }
        let shift = if iter % 11 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + re(h[(hi, hi - 1)].norm() * T::lit(0.75))
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        qr_step(h, z, lo, hi, shift);
    }
    Ok(())
}

/// One explicitly shifted QR sweep on the active block `lo..=hi`.
fn qr_step<T: Real>(
    h: &mut ComplexMatrix<T>,
    z: &mut ComplexMatrix<T>,
    lo: usize,
    hi: usize,
    shift: Complex<T>,
) {
    let n = h.dim();
    for k in lo..=hi {
        h[(k, k)] = h[(k, k)] - shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..n {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x.scale(c) + s * y;
            h[(k + 1, j)] = -s.conj() * x + y.scale(c);
        }
        h[(k + 1, k)] = Complex::zero();
        rots.push((c, s));
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        let rows = (k + 2).min(hi);
        for i in 0..=rows {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x.scale(c) + s.conj() * y;
            h[(i, k + 1)] = -s * x + y.scale(c);
        }
        for i in 0..n {
            let x = z[(i, k)];
            let y = z[(i, k + 1)];
            z[(i, k)] = x.scale(c) + s.conj() * y;
            z[(i, k + 1)] = -s * x + y.scale(c);
        }
    }
    for k in lo..=hi {
        h[(k, k)] = h[(k, k)] + shift;
    }
}

/// Triangularizes the 2x2 diagonal block at `(k, k)` in closed form.
fn two_by_two<T: Real>(h: &mut ComplexMatrix<T>, z: &mut ComplexMatrix<T>, k: usize) {
    let n = h.dim();
    let a = h[(k, k)];
    let b = h[(k, k + 1)];
    let c = h[(k + 1, k)];
    let d = h[(k + 1, k + 1)];
    let lam = wilkinson_shift(a, b, c, d);
    // eigenvector of the block for `lam` is (b, lam - a) or (lam - d, c)
    let (x, y) = if (lam - a).norm() + b.norm() >= (lam - d).norm() + c.norm() {
        (b, lam - a)
    } else {
        (lam - d, c)
    };
    if x.is_zero() && y.is_zero() {
        return;
    }
    // unitary whose first column is the normalized eigenvector
    let (cg, sg) = givens(x, y);
    // G [x; y] = [r; 0]  =>  G^dagger e1 is parallel to (x, y)
    for j in 0..n {
        let p = h[(k, j)];
        let q = h[(k + 1, j)];
        h[(k, j)] = p.scale(cg) + sg * q;
        h[(k + 1, j)] = -sg.conj() * p + q.scale(cg);
    }
    for i in 0..n {
        let p = h[(i, k)];
        let q = h[(i, k + 1)];
        h[(i, k)] = p.scale(cg) + sg.conj() * q;
        h[(i, k + 1)] = -sg * p + q.scale(cg);
        let p = z[(i, k)];
        let q = z[(i, k + 1)];
        z[(i, k)] = p.scale(cg) + sg.conj() * q;
        z[(i, k + 1)] = -sg * p + q.scale(cg);
    }
    h[(k + 1, k)] = Complex::zero();
}

/// Eigenvector of upper-triangular `t` for its k-th diagonal entry.
fn triangular_eigvec<T: Real>(t: &ComplexMatrix<T>, k: usize) -> Vec<Complex<T>> {
    let n = t.dim();
    let lam = t[(k, k)];
    let small = (T::unit_roundoff() * t.frobenius_norm()).max(T::min_positive_value());
    let big = T::one() / T::unit_roundoff();
    let mut x = vec![Complex::zero(); n];
    x[k] = Complex::new(T::one(), T::zero());
    for i in (0..k).rev() {
        let s = (i + 1..=k).fold(Complex::<T>::zero(), |acc, j| acc + t[(i, j)] * x[j]);
        let mut d = t[(i, i)] - lam;
        if d.norm() < small {
            d = re(small);
        }
        x[i] = -s / d;
        let xmax = x.iter().fold(T::zero(), |m, z| m.max(z.norm()));
        if xmax > big {
            for z in x.iter_mut() {
                *z = z.unscale(xmax);
            }
        }
    }
    x
}

fn collapse_defective_clusters<T: Real>(
    a: &ComplexMatrix<T>,
    eigenvalues: &mut [Complex<T>],
    vectors: &mut ComplexMatrix<T>,
) -> Result<(), LinalgError> {
    let n = eigenvalues.len();
    if n < 2 {
        return Ok(());
    }
    let u = T::unit_roundoff();
    let scale = a.frobenius_norm();
    if scale == T::zero() {
        return Ok(());
    }
    let radius = |m: usize| T::lit(CLUSTER_SCALE) * scale * u.powf(T::one() / T::lit(m as f64));
    let link = radius(n) + radius(n);

    // connected components under the widest admissible link distance
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if (eigenvalues[i] - eigenvalues[j]).norm() <= link {
                let (li, lj) = (label[i], label[j]);
                for l in label.iter_mut() {
                    if *l == lj {
                        *l = li;
                    }
                }
            }
        }
    }
    let mut roots: Vec<usize> = label.clone();
    roots.sort_unstable();
    roots.dedup();
    for root in roots {
        let members: Vec<usize> = (0..n).filter(|&i| label[i] == root).collect();
        let m = members.len();
        if m < 2 {
            continue;
        }
        let centroid = members
            .iter()
            .fold(Complex::zero(), |acc, &i| acc + eigenvalues[i])
            .unscale(T::lit(m as f64));
        let spread = members
            .iter()
            .map(|&i| (eigenvalues[i] - centroid).norm())
            .fold(T::zero(), T::max);
        if spread > radius(m) {
            continue;
        }
        let cols: Vec<Vec<Complex<T>>> = members.iter().map(|&i| vectors.column(i)).collect();
        if cluster_vector_ratio(&cols)? > T::lit(DEFECTIVE_VECTOR_RATIO) {
            continue;
        }
        let null = svd(&a.shifted(centroid))?;
        let mut v = null.right.column(n - 1);
        fix_phase(&mut v);
        for &i in &members {
            eigenvalues[i] = centroid;
            vectors.set_column(i, &v);
        }
    }
    Ok(())
}

/// `sigma_min / sigma_max` of the n x m matrix with the given columns.
fn cluster_vector_ratio<T: Real>(cols: &[Vec<Complex<T>>]) -> Result<T, LinalgError> {
    // Gram matrix route is enough here: the test only separates O(1) from
    // tiny ratios.
    let m = cols.len();
    let gram = ComplexMatrix::from_fn(m, |i, j| super::vec_dot(&cols[i], &cols[j]));
    let s = svd(&gram)?.values;
    let smax = s[0];
    if smax == T::zero() {
        return Ok(T::zero());
    }
    Ok((s[m - 1] / smax).max(T::zero()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    #[test]
    fn diagonal_input() {
        let a = ComplexMatrix::<f64>::from_real_diag(&[3.0, 1.0]);
        let e = eig_general(&a, 1e-10).unwrap();
        assert_eq!(e.eigenvalues, vec![re(1.0), re(3.0)]);
        assert!(e.vectors.approx_eq(
            &ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            1e-15
        ));
        assert!((e.condition - 1.0).abs() < 1e-14);
        assert!(!e.defective);
    }

    #[test]
    fn rotation_generator_has_imaginary_pair() {
        let a = ComplexMatrix::<f64>::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let e = eig_general(&a, 1e-10).unwrap();
        assert!((e.eigenvalues[0] - cplx(0.0, -1.0)).norm() < 1e-14);
        assert!((e.eigenvalues[1] - cplx(0.0, 1.0)).norm() < 1e-14);
        assert!(e.max_residual(&a) < 1e-14);
    }

    #[test]
    fn companion_matrix_of_known_cubic() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let a = ComplexMatrix::<f64>::from_real_rows(&[
            vec![6.0, -11.0, 6.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        let e = eig_general(&a, 1e-10).unwrap();
        for (z, want) in e.eigenvalues.iter().zip([1.0, 2.0, 3.0]) {
            assert!((*z - re(want)).norm() < 1e-12, "{z} vs {want}");
        }
        assert!(e.max_residual(&a) < 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn jordan_block_is_flagged() {
        let a = ComplexMatrix::<f64>::from_real_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let e = eig_general(&a, 1e-10).unwrap();
        assert_eq!(e.eigenvalues, vec![re(2.0), re(2.0)]);
        assert!(e.defective);
        assert!(e.condition >= 1e8);
        assert!(e.max_residual(&a) < 1e-14);
    }

    #[test]
    fn unit_columns_with_phase_convention() {
        let a = ComplexMatrix::from_rows(vec![
            vec![cplx(1.0, 2.0), re(3.0), cplx(0.0, -1.0)],
            vec![re(0.5), cplx(-1.0, 0.0), re(2.0)],
            vec![cplx(0.0, 1.0), re(1.0), re(4.0)],
        ])
        .unwrap();
        let e = eig_general(&a, 1e-10).unwrap();
        for k in 0..3 {
            let v = e.vectors.column(k);
            assert!((vec_norm(&v) - 1.0_f64).abs() < 1e-14);
            let big = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
            let pivot = v.iter().find(|z| z.norm() >= big * (1.0 - 1e-12)).unwrap();
            assert!(pivot.im.abs() < 1e-15 && pivot.re > 0.0);
        }
        assert!(e.max_residual(&a) < 1e-13 * a.frobenius_norm());
    }

    #[test]
    fn rejects_nonfinite() {
        let mut a = ComplexMatrix::<f64>::identity(2);
        a[(0, 1)] = re(f64::INFINITY);
        assert_eq!(eig_general(&a, 1e-10).unwrap_err(), LinalgError::NonFinite);
    }
}
