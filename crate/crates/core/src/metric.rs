//! Dyson maps, metric families `Theta(kappa)` and `Theta_rho`, and
//! Hermitization.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    default_tol, eig_general, eig_hermitian, hermitian_sqrt, numeric_rank, solve, ComplexMatrix,
    LinalgError,
};
use crate::models::Model;
use crate::scalar::{re, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("spectrum is degenerate (minimum gap {gap:e}); exceptional point nearby")]
    DegenerateSpectrum { gap: f64 },
    #[error("spectrum is not real (largest |Im E| = {imag:e})")]
    NonRealSpectrum { imag: f64 },
    #[error("weight kappa[{index}] = {value} is not positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("quasi-Hermiticity residual {residual:e} exceeds tolerance")]
    QuasiHermiticityViolated { residual: f64 },
    #[error("metric is not positive definite (eigenvalue {eigenvalue:e})")]
    IndefiniteMetric { eigenvalue: f64 },
    #[error("Dyson map is numerically singular (rank {rank} < {dim})")]
    SingularDysonMap { rank: usize, dim: usize },
    #[error("calibrated metric misses the target by {defect:e} (relative)")]
    CalibrationMismatch { defect: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Eigenpairs `H^dagger psi_n = E_n psi_n` with real, simple, ascending `E_n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct KetKetBasis<T: Real> {
    pub energies: Vec<T>,
    /// Column `n` is `psi_n`, unit norm, canonical phase.
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> KetKetBasis<T> {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn vector(&self, n: usize) -> Vec<Complex<T>> {
        self.vectors.column(n)
    }
}

#[derive(Clone, Debug)]
pub struct DysonMap<T: Real> {
    pub omega: ComplexMatrix<T>,
    pub kappa: Vec<T>,
}

impl<T: Real> DysonMap<T> {
    /// `Omega^dagger Omega`.
    pub fn metric(&self) -> ComplexMatrix<T> {
        &self.omega.adjoint() * &self.omega
    }
}

/// Eigenbasis of `H^dagger`.
///
/// Rejects spectra with a relative gap below `tol` or a non-real entry.
pub fn ketket_basis<T: Real>(h: &ComplexMatrix<T>, tol: T) -> Result<KetKetBasis<T>, MetricError> {
    let eig = eig_general(&h.adjoint(), tol)?;
    let scale = h.frobenius_norm().max(T::min_positive_value());
    let gap = eig.min_gap();
    if h.dim() > 1 && gap <= tol * scale {
        return Err(MetricError::DegenerateSpectrum {
            gap: gap.to_f64_lossy(),
        });
    }
    let imag = eig
        .eigenvalues
        .iter()
        .fold(T::zero(), |m, z| m.max(z.im.abs()));
    if imag > tol * scale {
        return Err(MetricError::NonRealSpectrum {
            imag: imag.to_f64_lossy(),
        });
    }
    Ok(KetKetBasis {
        energies: eig.eigenvalues.iter().map(|z| z.re).collect(),
        vectors: eig.vectors,
    })
}

fn check_kappa<T: Real>(basis: &KetKetBasis<T>, kappa: &[T]) -> Result<(), MetricError> {
    if kappa.len() != basis.dim() {
        return Err(MetricError::WeightCount {
            expected: basis.dim(),
            got: kappa.len(),
        });
    }
    match kappa
        .iter()
        .position(|&k| !(k > T::zero()) || !k.is_finite())
    {
        Some(index) => Err(MetricError::NonPositiveWeight {
            index,
            value: kappa[index].to_f64_lossy(),
        }),
        None => Ok(()),
    }
}

/// Dyson map whose adjoint has columns `kappa_n psi_n`.
pub fn dyson_map<T: Real>(basis: &KetKetBasis<T>, kappa: &[T]) -> Result<DysonMap<T>, MetricError> {
    check_kappa(basis, kappa)?;
    let n = basis.dim();
    let omega_dag = ComplexMatrix::from_fn(n, |i, j| basis.vectors[(i, j)].scale(kappa[j]));
    let omega = omega_dag.adjoint();
    let rank = numeric_rank(&omega, T::unit_roundoff() * T::lit(64.0 * n as f64));
    if rank < n {
        return Err(MetricError::SingularDysonMap { rank, dim: n });
    }
    Ok(DysonMap {
        omega,
        kappa: kappa.to_vec(),
    })
}

/// `sum_n psi_n kappa_n^2 E_n^rho psi_n^dagger`.
fn spectral_sum<T: Real>(basis: &KetKetBasis<T>, kappa: &[T], rho: u32) -> ComplexMatrix<T> {
    let n = basis.dim();
    let w: Vec<T> = (0..n)
        .map(|k| kappa[k] * kappa[k] * basis.energies[k].powi(rho as i32))
        .collect();
    let v = &basis.vectors;
    let m = ComplexMatrix::from_fn(n, |i, j| {
        (0..n).fold(Complex::zero(), |acc, k| {
            acc + v[(i, k)] * v[(j, k)].conj() * re(w[k])
        })
    });
    m.hermitian_part()
}

/// `Theta(kappa) = sum_n psi_n kappa_n^2 psi_n^dagger`.
pub fn metric_kappa<T: Real>(
    basis: &KetKetBasis<T>,
    kappa: &[T],
) -> Result<ComplexMatrix<T>, MetricError> {
    check_kappa(basis, kappa)?;
    Ok(spectral_sum(basis, kappa, 0))
}

/// `Theta_rho` from the spectral sum with `E_n^rho` inserted.
pub fn metric_rho_spectral<T: Real>(
    basis: &KetKetBasis<T>,
    kappa: &[T],
    rho: u32,
) -> Result<ComplexMatrix<T>, MetricError> {
    check_kappa(basis, kappa)?;
    Ok(spectral_sum(basis, kappa, rho))
}

/// `||H^dagger Theta - Theta H||_F / (||H||_F ||Theta||_F)`.
pub fn quasi_hermiticity_residual<T: Real>(h: &ComplexMatrix<T>, theta: &ComplexMatrix<T>) -> T {
    let denom = h.frobenius_norm() * theta.frobenius_norm();
    if denom == T::zero() {
        return T::zero();
    }
    (&(&h.adjoint() * theta) - &(theta * h)).frobenius_norm() / denom
}

/// `Theta_0 H^rho` by repeated multiplication, without any checks.
pub fn theta_rho_product<T: Real>(
    theta0: &ComplexMatrix<T>,
    h: &ComplexMatrix<T>,
    rho: u32,
) -> ComplexMatrix<T> {
    let mut out = theta0.clone();
    for _ in 0..rho {
        out = &out * h;
    }
    out
}

/// `Theta_rho = Theta_0 H^rho`, after checking that `Theta_0` is a
/// quasi-Hermiticity partner of `H` to the default tolerance.
pub fn metric_rho<T: Real>(
    theta0: &ComplexMatrix<T>,
    h: &ComplexMatrix<T>,
    rho: u32,
) -> Result<ComplexMatrix<T>, MetricError> {
    if theta0.dim() != h.dim() {
        return Err(LinalgError::DimensionMismatch {
            left: theta0.dim(),
            right: h.dim(),
        }
        .into());
    }
    let residual = quasi_hermiticity_residual(h, theta0);
    if residual > default_tol::<T>() {
        return Err(MetricError::QuasiHermiticityViolated {
            residual: residual.to_f64_lossy(),
        });
    }
    Ok(theta_rho_product(theta0, h, rho))
}

/// Hermitian partner `Omega H Omega^-1` with `Omega = sqrt(Theta)`.
pub fn hermitize<T: Real>(
    h: &ComplexMatrix<T>,
    theta: &ComplexMatrix<T>,
    tol: T,
) -> Result<ComplexMatrix<T>, MetricError> {
    let residual = quasi_hermiticity_residual(h, theta);
    if residual > tol {
        return Err(MetricError::QuasiHermiticityViolated {
            residual: residual.to_f64_lossy(),
        });
    }
    let eig = eig_hermitian(theta, tol)?;
    let lowest = eig.eigenvalues[0].re;
    if lowest <= tol * theta.frobenius_norm() {
        return Err(MetricError::IndefiniteMetric {
            eigenvalue: lowest.to_f64_lossy(),
        });
    }
    let omega = hermitian_sqrt(theta, tol)?;
    // Omega is Hermitian, so (Omega H Omega^-1)^dagger = Omega^-1 (Omega H)^dagger
    let oh = &omega * h;
    Ok(solve(&omega, &oh.adjoint())?.adjoint())
}

/// Weights `kappa` with `metric_kappa(basis, kappa) = target`.
///
/// The squares `c_n = kappa_n^2` enter linearly; they are fitted by least
/// squares over every entry and the fit is accepted only when it reproduces
/// the whole target to `tol` (relative, Frobenius).
pub fn calibrate_kappa<T: Real>(
    basis: &KetKetBasis<T>,
    target: &ComplexMatrix<T>,
    tol: T,
) -> Result<Vec<T>, MetricError> {
    let n = basis.dim();
    if target.dim() != n {
        return Err(LinalgError::DimensionMismatch {
            left: n,
            right: target.dim(),
        }
        .into());
    }
    let v = &basis.vectors;
    // design columns: vec(psi_k psi_k^dagger), split into real and imaginary rows
    let design = |i: usize, j: usize, k: usize| v[(i, k)] * v[(j, k)].conj();
    let mut normal = ComplexMatrix::<T>::zeros(n);
    let mut rhs = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let b = target[(i, j)];
            for p in 0..n {
                let ap = design(i, j, p);
                rhs[(p, 0)] += re(ap.re * b.re + ap.im * b.im);
                for q in 0..n {
                    let aq = design(i, j, q);
                    normal[(p, q)] += re(ap.re * aq.re + ap.im * aq.im);
                }
            }
        }
    }
    let c = solve(&normal, &rhs)?.column(0);
    let kappa: Vec<T> = c
        .iter()
        .enumerate()
        .map(|(index, z)| {
            if z.re > T::zero() {
                Ok(z.re.sqrt())
            } else {
                Err(MetricError::NonPositiveWeight {
                    index,
                    value: z.re.to_f64_lossy(),
                })
            }
        })
        .collect::<Result<_, _>>()?;
    let fitted = spectral_sum(basis, &kappa, 0);
    let defect = (&fitted - target).frobenius_norm() / target.frobenius_norm();
    if defect > tol {
        return Err(MetricError::CalibrationMismatch {
            defect: defect.to_f64_lossy(),
        });
    }
    Ok(kappa)
}

/// How a [`MetricFamily`] picks its weights at each `t`.
#[derive(Clone, Debug)]
pub enum KappaChoice<T> {
    /// The same weights everywhere.
    Fixed(Vec<T>),
    /// Weights reproducing the model's reference metric `Theta_0(t)`.
    Calibrated,
}

struct FamilyEntry<T: Real> {
    basis: KetKetBasis<T>,
    kappa: Vec<T>,
}

/// Factory for `Theta_rho(t, kappa)` over one model.
///
/// Bases and weights are cached per `t`. The cache is behind a lock and
/// stores exactly what an uncached call computes, so results do not depend
/// on call order or thread interleaving.
pub struct MetricFamily<T: Real, M: Model<T>> {
    model: M,
    kappa: KappaChoice<T>,
    tol: T,
    cache: RwLock<HashMap<(u64, u64), Arc<FamilyEntry<T>>>>,
}

impl<T: Real, M: Model<T>> MetricFamily<T, M> {
    pub fn new(model: M, kappa: KappaChoice<T>, tol: T) -> Self {
        Self {
            model,
            kappa,
            tol,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    fn entry(&self, t: T) -> Result<Arc<FamilyEntry<T>>, MetricError> {
        let key = t.key_bits();
        if let Some(e) = self.cache.read().expect("cache lock poisoned").get(&key) {
            return Ok(Arc::clone(e));
        }
        let basis = ketket_basis(&self.model.hamiltonian(t), self.tol)?;
        let kappa = match &self.kappa {
            KappaChoice::Fixed(k) => {
                check_kappa(&basis, k)?;
                k.clone()
            }
            KappaChoice::Calibrated => {
                // the fit inherits the conditioning of Theta_0, so allow a
                // looser match than the basis tolerance
                let fit_tol = self.tol.sqrt().max(default_tol::<T>());
                calibrate_kappa(&basis, &self.model.metric0(t), fit_tol)?
            }
        };
        let entry = Arc::new(FamilyEntry { basis, kappa });
        let mut cache = self.cache.write().expect("cache lock poisoned");
        Ok(Arc::clone(cache.entry(key).or_insert(entry)))
    }

    pub fn basis(&self, t: T) -> Result<KetKetBasis<T>, MetricError> {
        Ok(self.entry(t)?.basis.clone())
    }

    pub fn kappa(&self, t: T) -> Result<Vec<T>, MetricError> {
        Ok(self.entry(t)?.kappa.clone())
    }

    /// `Theta_rho(t)` by the spectral sum.
    pub fn theta(&self, t: T, rho: u32) -> Result<ComplexMatrix<T>, MetricError> {
        let e = self.entry(t)?;
        metric_rho_spectral(&e.basis, &e.kappa, rho)
    }

    pub fn dyson_map(&self, t: T) -> Result<DysonMap<T>, MetricError> {
        let e = self.entry(t)?;
        dyson_map(&e.basis, &e.kappa)
    }

    pub fn cached_points(&self) -> usize {
        self.cache.read().expect("cache lock poisoned").len()
    }
}

/// A model whose reference metric is replaced by `Theta(kappa)` with fixed
/// weights.
///
/// Where the ketket basis does not exist (at an exceptional point) the
/// metric is a NaN matrix, which downstream solvers reject as non-finite.
pub struct Reweighted<T: Real, M: Model<T>> {
    pub inner: M,
    pub kappa: Vec<T>,
    pub tol: T,
}

impl<T: Real, M: Model<T>> Model<T> for Reweighted<T, M> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn hamiltonian(&self, t: T) -> ComplexMatrix<T> {
        self.inner.hamiltonian(t)
    }

    fn metric0(&self, t: T) -> ComplexMatrix<T> {
        ketket_basis(&self.inner.hamiltonian(t), self.tol)
            .and_then(|b| metric_kappa(&b, &self.kappa))
            .unwrap_or_else(|_| ComplexMatrix::from_fn(self.dim(), |_, _| re(T::nan())))
    }

    fn energies(&self, t: T) -> Option<Vec<T>> {
        self.inner.energies(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{h2, theta0_2, ToyModel};

    #[test]
    fn diagonal_basis_and_unit_weights() {
        let basis = ketket_basis(&h2(1.0_f64), 1e-10).unwrap();
        assert_eq!(basis.energies, vec![1.0, 3.0]);
        assert!(basis.vectors.approx_eq(&ComplexMatrix::identity(2), 0.0));
        let d = dyson_map(&basis, &[1.0, 1.0]).unwrap();
        assert!(d.omega.approx_eq(&ComplexMatrix::identity(2), 0.0));
        let d = dyson_map(&basis, &[2.0, 3.0]).unwrap();
        assert!(d
            .omega
            .adjoint()
            .approx_eq(&ComplexMatrix::from_real_diag(&[2.0, 3.0]), 0.0));
        assert!(matches!(
            dyson_map(&basis, &[1.0, 0.0]),
            Err(MetricError::NonPositiveWeight { index: 1, .. })
        ));
    }

    #[test]
    fn ep_is_degenerate() {
        assert!(matches!(
            ketket_basis(&h2(0.0_f64), 1e-10),
            Err(MetricError::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn spectral_rho_on_diagonal_basis() {
        let basis = ketket_basis(&h2(1.0_f64), 1e-10).unwrap();
        let m = metric_rho_spectral(&basis, &[1.0, 1.0], 2).unwrap();
        assert!(m.approx_eq(&ComplexMatrix::from_real_diag(&[1.0, 9.0]), 1e-15));
    }

    #[test]
    fn metric_rho_rejects_foreign_metric() {
        let h = h2(0.5_f64);
        assert!(matches!(
            metric_rho(&ComplexMatrix::identity(2), &h, 1),
            Err(MetricError::QuasiHermiticityViolated { .. })
        ));
        let theta1 = metric_rho(&theta0_2(0.5), &h, 1).unwrap();
        let s = 0.75_f64.sqrt();
        let want =
            ComplexMatrix::from_real_rows(&[vec![1.75, -2.0 * s], vec![-2.0 * s, 2.25]]).unwrap();
        assert!(theta1.approx_eq(&want, 1e-14));
    }

    #[test]
    fn family_cache_is_transparent() {
        let fam = MetricFamily::new(ToyModel::TwoLevel, KappaChoice::Calibrated, 1e-10_f64);
        let a = fam.theta(0.5, 2).unwrap();
        let b = fam.theta(0.5, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(fam.cached_points(), 1);
        let fresh = MetricFamily::new(ToyModel::TwoLevel, KappaChoice::Calibrated, 1e-10_f64);
        assert_eq!(fresh.theta(0.5, 2).unwrap(), a);
    }
}
