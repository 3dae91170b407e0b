//! Solvable two- and four-level models and their closed-form oracles.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::ComplexMatrix;
use crate::scalar::{re, sqrt_one_minus_sq, Real};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("no closed-form metric spectrum for rho = {0} (supported: 0..=4)")]
    UnsupportedRho(u32),
    #[error("unknown model `{0}` (expected `two` or `four`)")]
    UnknownModel(String),
}

/// Matrix-valued function of the real parameter `t`.
pub trait ParamOperator<T: Real>: Send + Sync {
    fn eval(&self, t: T) -> ComplexMatrix<T>;
}

impl<T: Real, F> ParamOperator<T> for F
where
    F: Fn(T) -> ComplexMatrix<T> + Send + Sync,
{
    fn eval(&self, t: T) -> ComplexMatrix<T> {
        self(t)
    }
}

/// A parametrized quasi-Hermitian Hamiltonian together with one known metric.
pub trait Model<T: Real>: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn hamiltonian(&self, t: T) -> ComplexMatrix<T>;
    /// Reference metric `Theta_0(t)` with `H^dagger Theta_0 = Theta_0 H`.
    fn metric0(&self, t: T) -> ComplexMatrix<T>;
    /// Closed-form energies in ascending order, when known.
    fn energies(&self, _t: T) -> Option<Vec<T>> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ToyModel {
    #[serde(rename = "two")]
    TwoLevel,
    #[serde(rename = "four")]
    FourLevel,
}

impl ToyModel {
    pub fn id(self) -> &'static str {
        match self {
            ToyModel::TwoLevel => "two",
            ToyModel::FourLevel => "four",
        }
    }
}

impl fmt::Display for ToyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ToyModel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two" | "2" => Ok(ToyModel::TwoLevel),
            "four" | "4" => Ok(ToyModel::FourLevel),
            other => Err(ModelError::UnknownModel(other.to_string())),
        }
    }
}

impl<T: Real> Model<T> for ToyModel {
    fn name(&self) -> &str {
        self.id()
    }

    fn dim(&self) -> usize {
        match self {
            ToyModel::TwoLevel => 2,
            ToyModel::FourLevel => 4,
        }
    }

    fn hamiltonian(&self, t: T) -> ComplexMatrix<T> {
        match self {
            ToyModel::TwoLevel => h2(t),
            ToyModel::FourLevel => h4(t),
        }
    }

    fn metric0(&self, t: T) -> ComplexMatrix<T> {
        match self {
            ToyModel::TwoLevel => theta0_2(t),
            ToyModel::FourLevel => theta0_4(t),
        }
    }

    fn energies(&self, t: T) -> Option<Vec<T>> {
        let mut e = match self {
            ToyModel::TwoLevel => vec![T::lit(2.0) - t, T::lit(2.0) + t],
            ToyModel::FourLevel => {
                let c = T::lit(4.0);
                let t3 = T::lit(3.0) * t;
                vec![c - t3, c - t, c + t, c + t3]
            }
        };
        e.sort_by(|a, b| a.partial_cmp(b).expect("finite energies"));
        Some(e)
    }
}

/// User-supplied model built from two parametrized operators.
pub struct CustomModel<T: Real> {
    name: String,
    dim: usize,
    hamiltonian: Box<dyn ParamOperator<T>>,
    metric0: Box<dyn ParamOperator<T>>,
}

impl<T: Real> CustomModel<T> {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        hamiltonian: impl ParamOperator<T> + 'static,
        metric0: impl ParamOperator<T> + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            hamiltonian: Box::new(hamiltonian),
            metric0: Box::new(metric0),
        }
    }
}

impl<T: Real> Model<T> for CustomModel<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn hamiltonian(&self, t: T) -> ComplexMatrix<T> {
        self.hamiltonian.eval(t)
    }

    fn metric0(&self, t: T) -> ComplexMatrix<T> {
        self.metric0.eval(t)
    }
}

/// Wraps a model so that every `t` maps to the same fixed parameter.
pub struct Frozen<M> {
    pub inner: M,
    pub at: f64,
}

impl<T: Real, M: Model<T>> Model<T> for Frozen<M> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn hamiltonian(&self, _t: T) -> ComplexMatrix<T> {
        self.inner.hamiltonian(T::lit(self.at))
    }

    fn metric0(&self, _t: T) -> ComplexMatrix<T> {
        self.inner.metric0(T::lit(self.at))
    }

    fn energies(&self, _t: T) -> Option<Vec<T>> {
        self.inner.energies(T::lit(self.at))
    }
}

/// Two-level Hamiltonian `[[1, s], [-s, 3]]`, `s = sqrt(1 - t^2)`.
pub fn h2<T: Real>(t: T) -> ComplexMatrix<T> {
    let s = sqrt_one_minus_sq(t);
    let m = [[re(T::one()), s], [-s, re(T::lit(3.0))]];
    ComplexMatrix::from_fn(2, |i, j| m[i][j])
}

/// Reference metric of the two-level model, `[[1, -s], [-s, 1]]`.
pub fn theta0_2<T: Real>(t: T) -> ComplexMatrix<T> {
    let s = sqrt_one_minus_sq(t);
    let one = re(T::one());
    let m = [[one, -s], [-s, one]];
    ComplexMatrix::from_fn(2, |i, j| m[i][j])
}

/// Four-level tridiagonal Hamiltonian with diagonal `1, 3, 5, 7`.
pub fn h4<T: Real>(t: T) -> ComplexMatrix<T> {
    let s = sqrt_one_minus_sq(t);
    let r3 = T::lit(3.0).sqrt();
    let a = s.scale(r3);
    let b = s.scale(T::lit(2.0));
    let z = Complex::new(T::zero(), T::zero());
    let d = |x: f64| re(T::lit(x));
    let m = [
        [d(1.0), a, z, z],
        [-a, d(3.0), b, z],
        [z, -b, d(5.0), a],
        [z, z, -a, d(7.0)],
    ];
    ComplexMatrix::from_fn(4, |i, j| m[i][j])
}

/// Reference metric of the four-level model.
///
/// Powers of `s` are formed as `s^2 = 1 - t^2` and `s^3 = s * s^2` so that
/// the principal branch is kept consistently beyond `|t| = 1`.
pub fn theta0_4<T: Real>(t: T) -> ComplexMatrix<T> {
    let s = sqrt_one_minus_sq(t);
    let s2 = re(T::one() - t * t);
    let s3 = s * s2;
    let r3 = T::lit(3.0).sqrt();
    let one = re(T::one());
    let mid = re(T::lit(3.0) - T::lit(2.0) * t * t);
    let a = -s.scale(r3);
    let b = s2.scale(r3);
    let c = -s.scale(T::lit(2.0)) - s3;
    let m = [
        [one, a, b, -s3],
        [a, mid, c, b],
        [b, c, mid, a],
        [-s3, b, a, one],
    ];
    ComplexMatrix::from_fn(4, |i, j| m[i][j])
}

/// Closed-form eigenvalue pair `(theta_minus, theta_plus)` of the two-level
/// `Theta_rho(t)`, `0 <= rho <= 4`.
///
/// The square root uses the principal complex branch, so a negative
/// discriminant yields a conjugate pair.
pub fn theta_rho_2_analytic<T: Real>(
    rho: u32,
    t: T,
) -> Result<(Complex<T>, Complex<T>), ModelError> {
    let l = |x: f64| T::lit(x);
    let t2 = t * t;
    let t4 = t2 * t2;
    let t6 = t4 * t2;
    let t8 = t4 * t4;
    let t10 = t8 * t2;
    if rho == 1 {
        return Ok((re(t2), re(l(4.0) - t2)));
    }
    let (centre, disc) = match rho {
        0 => (T::one(), T::one() - t2),
        2 => (l(4.0) + t2, l(16.0) - l(8.0) * t2 + l(9.0) * t4 - t6),
        3 => (
            l(8.0) + l(6.0) * t2,
            l(64.0) + l(32.0) * t2 + l(84.0) * t4 - l(12.0) * t6 + t8,
        ),
        4 => (
            l(16.0) + l(24.0) * t2 + t4,
            l(256.0) + l(512.0) * t2 + l(864.0) * t4 - l(48.0) * t6 + l(17.0) * t8 - t10,
        ),
        other => return Err(ModelError::UnsupportedRho(other)),
    };
    let root = if disc >= T::zero() {
        re(disc.sqrt())
    } else {
        Complex::new(T::zero(), (-disc).sqrt())
    };
    Ok((re(centre) - root, re(centre) + root))
}

/// Cardano expression for the complexification point of the `rho = 2` metric.
pub fn cardano_t2() -> f64 {
    let c = (73.0 + 6.0 * 87.0_f64.sqrt()).cbrt();
    (1.0 + c + 13.0 / c) / 3.0
}

/// Quintic in `u = t^2` under the square root of the `rho = 4` eigenvalues.
pub fn rho4_radicand(u: f64) -> f64 {
    // Horner form of 256 + 512u + 864u^2 - 48u^3 + 17u^4 - u^5
    ((((-u + 17.0) * u - 48.0) * u + 864.0) * u + 512.0) * u + 256.0
}

/// Smallest positive `t` where the `rho = 4` radicand changes sign.
pub fn t4_numeric() -> f64 {
    // radicand is positive at u = 0 and negative for large u; walk to the
    // first sign change, then bisect to machine precision
    let mut lo = 0.0_f64;
    let mut hi = 0.5_f64;
    while rho4_radicand(hi) > 0.0 {
        lo = hi;
        hi += 0.5;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rho4_radicand(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamiltonians_at_t_one_are_diagonal() {
        assert!(h2(1.0_f64).approx_eq(&ComplexMatrix::from_real_diag(&[1.0, 3.0]), 0.0));
        assert!(h4(1.0_f64).approx_eq(&ComplexMatrix::from_real_diag(&[1.0, 3.0, 5.0, 7.0]), 0.0));
        assert!(theta0_2(1.0_f64).approx_eq(&ComplexMatrix::identity(2), 0.0));
        assert!(theta0_4(1.0_f64).approx_eq(&ComplexMatrix::identity(4), 0.0));
    }

    #[test]
    fn h2_at_zero() {
        let h = h2(0.0_f64);
        let want = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![-1.0, 3.0]]).unwrap();
        assert!(h.approx_eq(&want, 0.0));
    }

    #[test]
    fn special_values() {
        assert!((cardano_t2() - 2.875129794).abs() < 1e-8);
        assert!((t4_numeric() - 4.150651137).abs() < 1e-8);
        let t2 = cardano_t2();
        let disc = 16.0 - 8.0 * t2.powi(2) + 9.0 * t2.powi(4) - t2.powi(6);
        assert!(disc.abs() < 1e-7);
    }

    #[test]
    fn analytic_pairs() {
        let (m, p) = theta_rho_2_analytic(2, 0.0_f64).unwrap();
        assert_eq!((m, p), (re(0.0), re(8.0)));
        let (m, p) = theta_rho_2_analytic(1, 2.0_f64).unwrap();
        assert_eq!((m.re, p.re), (4.0, 0.0));
        let (m, p) = theta_rho_2_analytic(2, 3.0_f64).unwrap();
        assert!(m.im != 0.0 && m == p.conj());
        assert_eq!(
            theta_rho_2_analytic(5, 0.5_f64),
            Err(ModelError::UnsupportedRho(5))
        );
    }

    #[test]
    fn model_ids_round_trip() {
        for m in [ToyModel::TwoLevel, ToyModel::FourLevel] {
            assert_eq!(m.id().parse::<ToyModel>().unwrap(), m);
        }
        assert!("three".parse::<ToyModel>().is_err());
    }
}
