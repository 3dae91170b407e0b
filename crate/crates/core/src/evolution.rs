//! Time evolution under a frozen non-Hermitian `H` and under the
//! Coriolis-corrected generator of a moving metric.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    eig_general, eig_hermitian, expm, hermitian_sqrt, inverse, solve, vec_norm, ComplexMatrix,
    LinalgError,
};
use crate::metric::{metric_rho, quasi_hermiticity_residual, MetricError};
use crate::models::{Model, ParamOperator};
use crate::scalar::{cplx, re, Real};

/// Residual bound required before a stationary propagation is trusted.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-8;
/// Eigenvector condition above which the exponential replaces the eigenbasis.
pub const EIGENBASIS_CONDITION_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error("state has {got} amplitudes, operator has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state has non-finite amplitudes")]
    NonFiniteState,
    #[error("step count must be positive")]
    NoSteps,
    #[error("invalid interval: need t0 < t1 and horizon > 0")]
    InvalidInterval,
    #[error("Dyson map is singular at t = {t:e}")]
    SingularOmega { t: f64 },
    #[error("metric leaves the unitary regime at t = {t:e} (lowest eigenvalue {eigenvalue:e})")]
    RegimeViolation { t: f64, eigenvalue: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct StateVector<T> {
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self, EvolutionError> {
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(EvolutionError::NonFiniteState);
        }
        Ok(Self { amplitudes })
    }

    /// Unit vector along axis `k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amplitudes = vec![Complex::zero(); dim];
        amplitudes[k] = re(T::one());
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    /// `<psi|Theta|psi>`, real part.
    pub fn physical_norm(&self, theta: &ComplexMatrix<T>) -> T {
        theta.sandwich(&self.amplitudes, &self.amplitudes).re
    }

    pub fn euclidean_norm(&self) -> T {
        vec_norm(&self.amplitudes)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct PropagationRecord<T> {
    pub samples: Vec<T>,
    pub states: Vec<StateVector<T>>,
    pub physical_norms: Vec<T>,
    /// `max_k |n_k - n_0| / n_0` over the recorded norms.
    pub drift: T,
}

impl<T: Real> PropagationRecord<T> {
    fn from_parts(samples: Vec<T>, states: Vec<StateVector<T>>, physical_norms: Vec<T>) -> Self {
        let n0 = physical_norms[0];
        let drift = physical_norms
            .iter()
            .fold(T::zero(), |acc, &n| acc.max((n - n0).abs()))
            / n0.abs();
        Self {
            samples,
            states,
            physical_norms,
            drift,
        }
    }

    pub fn final_state(&self) -> &StateVector<T> {
        self.states
            .last()
            .expect("record holds at least the initial state")
    }
}

fn check_state<T: Real>(psi: &StateVector<T>, dim: usize) -> Result<(), EvolutionError> {
    if psi.dim() != dim {
        return Err(EvolutionError::DimensionMismatch {
            expected: dim,
            got: psi.dim(),
        });
    }
    Ok(())
}

/// `psi(s) = exp(-i H s) psi0` sampled at `steps + 1` equidistant times in
/// `[0, horizon]`, with norms measured against `theta`.
///
/// `theta` must be positive definite and a quasi-Hermiticity partner of `H`
/// to [`STATIONARY_RESIDUAL_TOL`].
pub fn propagate_stationary<T: Real>(
    h: &ComplexMatrix<T>,
    theta: &ComplexMatrix<T>,
    psi0: &StateVector<T>,
    horizon: T,
    steps: usize,
) -> Result<PropagationRecord<T>, EvolutionError> {
    let residual = quasi_hermiticity_residual(h, theta);
    if residual > T::lit(STATIONARY_RESIDUAL_TOL) {
        return Err(MetricError::QuasiHermiticityViolated {
            residual: residual.to_f64_lossy(),
        }
        .into());
    }
    let tol = T::lit(STATIONARY_RESIDUAL_TOL);
    let lowest = eig_hermitian(&theta.hermitian_part(), tol)?.eigenvalues[0].re;
    if lowest <= T::unit_roundoff() * theta.frobenius_norm() {
        return Err(MetricError::IndefiniteMetric {
            eigenvalue: lowest.to_f64_lossy(),
        }
        .into());
    }
    propagate_stationary_unchecked(h, theta, psi0, horizon, steps)
}

/// [`propagate_stationary`] without the metric checks, for measuring norms
/// that are not expected to be conserved.
pub fn propagate_stationary_unchecked<T: Real>(
    h: &ComplexMatrix<T>,
    theta: &ComplexMatrix<T>,
    psi0: &StateVector<T>,
    horizon: T,
    steps: usize,
) -> Result<PropagationRecord<T>, EvolutionError> {
    let n = h.dim();
    check_state(psi0, n)?;
    check_state(psi0, theta.dim())?;
    if steps == 0 {
        return Err(EvolutionError::NoSteps);
    }
    if !(horizon > T::zero()) {
        return Err(EvolutionError::InvalidInterval);
    }
    let ds = horizon / T::lit(steps as f64);
    let eig = eig_general(h, T::lit(STATIONARY_RESIDUAL_TOL))?;
    let use_eigenbasis = eig.condition <= T::lit(EIGENBASIS_CONDITION_LIMIT) && !eig.defective;

    let mut samples = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    if use_eigenbasis {
        let coeffs = inverse(&eig.vectors)?.mul_vec(psi0.amplitudes());
        for k in 0..=steps {
            let s = if k == steps {
                horizon
            } else {
                ds * T::lit(k as f64)
            };
            let phased: Vec<Complex<T>> = coeffs
                .iter()
                .zip(&eig.eigenvalues)
                .map(|(&c, &lam)| c * (cplx(T::zero(), -s) * lam).exp())
                .collect();
            samples.push(s);
            states.push(StateVector::new(eig.vectors.mul_vec(&phased))?);
        }
    } else {
        let step = expm(&h.scale(cplx(T::zero(), -ds)));
        let mut psi = psi0.amplitudes().to_vec();
        for k in 0..=steps {
            if k > 0 {
                psi = step.mul_vec(&psi);
            }
            samples.push(if k == steps {
                horizon
            } else {
                ds * T::lit(k as f64)
            });
            states.push(StateVector::new(psi.clone())?);
        }
    }
    let norms = states.iter().map(|s| s.physical_norm(theta)).collect();
    Ok(PropagationRecord::from_parts(samples, states, norms))
}

/// Finite-difference step for the Coriolis term at parameter `t`.
pub fn default_fd_step<T: Real>(t: T) -> T {
    T::unit_roundoff().cbrt() * T::one().max(t.abs())
}

/// `Sigma(t) = i Omega(t)^-1 dOmega/dt` with a central difference of width `dt`.
pub fn coriolis<T: Real, P: ParamOperator<T> + ?Sized>(
    omega_of_t: &P,
    t: T,
    dt: T,
) -> Result<ComplexMatrix<T>, EvolutionError> {
    assert!(dt > T::zero(), "coriolis needs dt > 0");
    coriolis_fn(|s| omega_of_t.eval(s), t, dt)
}

/// `Theta_rho(t)` and its positive square root, or the reason the metric
/// is not usable for unitary evolution at `t`.
pub fn dyson_factor<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    rho: u32,
    t: T,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>), EvolutionError> {
    let tol = T::lit(STATIONARY_RESIDUAL_TOL);
    let violation = |eigenvalue: f64| EvolutionError::RegimeViolation {
        t: t.to_f64_lossy(),
        eigenvalue,
    };
    // beyond |t| = 1 the reference metric stops being a quasi-Hermiticity partner
    let theta = metric_rho(&model.metric0(t), &model.hamiltonian(t), rho)
        .map_err(|_| violation(f64::NAN))?;
    if theta.hermiticity_defect() > tol {
        return Err(violation(f64::NAN));
    }
    let theta = theta.hermitian_part();
    let lowest = eig_hermitian(&theta, tol)?.eigenvalues[0].re;
    if lowest <= tol * theta.frobenius_norm() {
        return Err(violation(lowest.to_f64_lossy()));
    }
    let omega = hermitian_sqrt(&theta, tol)?;
    Ok((theta, omega))
}

/// `G(t) = H(t) - Sigma(t)` with `Omega = sqrt(Theta_rho)`.
pub fn generator<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    rho: u32,
    t: T,
) -> Result<ComplexMatrix<T>, EvolutionError> {
    let mut failure = None;
    let omega_of_t = |s: T| match dyson_factor(model, rho, s) {
        Ok((_, omega)) => omega,
        Err(e) => {
            failure.get_or_insert(e);
            ComplexMatrix::identity(model.dim())
        }
    };
    let sigma = coriolis_fn(omega_of_t, t, default_fd_step(t));
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(&model.hamiltonian(t) - &sigma?)
}

// `coriolis` for a non-`Sync` closure.
fn coriolis_fn<T: Real>(
    mut omega_of_t: impl FnMut(T) -> ComplexMatrix<T>,
    t: T,
    dt: T,
) -> Result<ComplexMatrix<T>, EvolutionError> {
    let omega = omega_of_t(t);
    let d = &omega_of_t(t + dt) - &omega_of_t(t - dt);
    let d = d.scale_real(T::one() / (dt + dt));
    let singular = || EvolutionError::SingularOmega {
        t: t.to_f64_lossy(),
    };
    let x = solve(&omega, &d).map_err(|_| singular())?;
    if !x.is_finite() {
        return Err(singular());
    }
    Ok(x.scale(cplx(T::zero(), T::one())))
}

/// Integrates `i dpsi/dt = G(t) psi` on `[t0, t1]` with classical RK4 and
/// records `<psi|Theta_rho(t)|psi>` at every step.
///
/// Fails with [`EvolutionError::RegimeViolation`] as soon as a stage point
/// leaves the positive-definite regime.
pub fn propagate_nonstationary<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    rho: u32,
    t0: T,
    t1: T,
    steps: usize,
    psi0: &StateVector<T>,
) -> Result<PropagationRecord<T>, EvolutionError> {
    check_state(psi0, model.dim())?;
    if steps == 0 {
        return Err(EvolutionError::NoSteps);
    }
    if !(t0 < t1) {
        return Err(EvolutionError::InvalidInterval);
    }
    let h = (t1 - t0) / T::lit(steps as f64);
    let half = T::lit(0.5);
    let minus_i = cplx(T::zero(), -T::one());
    let rhs = |g: &ComplexMatrix<T>, psi: &[Complex<T>]| -> Vec<Complex<T>> {
        g.mul_vec(psi).into_iter().map(|z| z * minus_i).collect()
    };
    let axpy = |psi: &[Complex<T>], k: &[Complex<T>], c: T| -> Vec<Complex<T>> {
        psi.iter().zip(k).map(|(&p, &q)| p + q * c).collect()
    };

    let mut samples = vec![t0];
    let mut psi = psi0.amplitudes().to_vec();
    let mut states = vec![psi0.clone()];
    let mut norms = vec![psi0.physical_norm(&dyson_factor(model, rho, t0)?.0)];
    let mut g_start = generator(model, rho, t0)?;
    for k in 0..steps {
        let t = t0 + h * T::lit(k as f64);
        let t_end = if k + 1 == steps {
            t1
        } else {
            t0 + h * T::lit((k + 1) as f64)
        };
        let g_mid = generator(model, rho, t + h * half)?;
        let g_end = generator(model, rho, t_end)?;
        let k1 = rhs(&g_start, &psi);
        let k2 = rhs(&g_mid, &axpy(&psi, &k1, h * half));
        let k3 = rhs(&g_mid, &axpy(&psi, &k2, h * half));
        let k4 = rhs(&g_end, &axpy(&psi, &k3, h));
        let sixth = h / T::lit(6.0);
        psi = psi
            .iter()
            .enumerate()
            .map(|(i, &p)| p + (k1[i] + (k2[i] + k3[i]) * re(T::lit(2.0)) + k4[i]) * re(sixth))
            .collect();
        let state = StateVector::new(psi.clone())?;
        norms.push(state.physical_norm(&dyson_factor(model, rho, t_end)?.0));
        samples.push(t_end);
        states.push(state);
        g_start = g_end;
    }
    Ok(PropagationRecord::from_parts(samples, states, norms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{h2, theta0_2, ToyModel};

    #[test]
    fn diagonal_phase_evolution() {
        let h = ComplexMatrix::<f64>::from_real_diag(&[1.0, 3.0]);
        let id = ComplexMatrix::identity(2);
        let rec = propagate_stationary(&h, &id, &StateVector::basis(2, 0), 2.0, 4).unwrap();
        for (s, psi) in rec.samples.iter().zip(&rec.states) {
            let expected = Complex::new(0.0, -s).exp();
            assert!((psi.amplitudes()[0] - expected).norm() < 1e-15);
            assert_eq!(psi.amplitudes()[1], Complex::zero());
        }
        assert!(rec.drift < 1e-15);
    }

    #[test]
    fn rejects_wrong_metric() {
        let h = h2(0.5_f64);
        let err = propagate_stationary(
            &h,
            &ComplexMatrix::identity(2),
            &StateVector::basis(2, 0),
            1.0,
            2,
        );
        assert!(matches!(
            err,
            Err(EvolutionError::Metric(
                MetricError::QuasiHermiticityViolated { .. }
            ))
        ));
        let neg = theta0_2(0.5_f64).scale_real(-1.0);
        let err = propagate_stationary(&h, &neg, &StateVector::basis(2, 0), 1.0, 2);
        assert!(matches!(
            err,
            Err(EvolutionError::Metric(MetricError::IndefiniteMetric { .. }))
        ));
    }

    #[test]
    fn coriolis_of_scalar_exponential() {
        let omega = |t: f64| ComplexMatrix::<f64>::identity(3).scale_real(t.exp());
        let sigma = coriolis(&omega, 0.3, 1e-4).unwrap();
        let expected = ComplexMatrix::identity(3).scale(cplx(0.0, 1.0));
        assert!((&sigma - &expected).max_abs() < 1e-8);
        let constant = |_t: f64| ComplexMatrix::<f64>::identity(2);
        assert_eq!(coriolis(&constant, 0.3, 1e-3).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn regime_violation_reported() {
        let psi = StateVector::basis(2, 0);
        let err = propagate_nonstationary(&ToyModel::TwoLevel, 1, 0.5, 1.5, 4, &psi);
        assert!(
            matches!(err, Err(EvolutionError::RegimeViolation { .. })),
            "{err:?}"
        );
    }
}
