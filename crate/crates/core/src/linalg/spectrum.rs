use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpectrumKind {
    AllRealPositive,
    AllRealMixedSign,
    SomeComplex,
}

/// Coarse classification of a spectrum against a relative tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumClass<T> {
    pub kind: SpectrumKind,
    pub min_real: T,
    pub max_imag_abs: T,
}

/// Classifies `eigs` relative to `scale = max |lambda|`.
///
/// `AllRealMixedSign` also covers spectra touching zero: anything that is
/// real but not strictly positive beyond `tol * scale`.
pub fn classify_spectrum<T: Real>(eigs: &[Complex<T>], tol: T) -> SpectrumClass<T> {
    assert!(!eigs.is_empty(), "cannot classify an empty spectrum");
    let scale = eigs.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    let min_real = eigs.iter().fold(T::infinity(), |m, z| m.min(z.re));
    let max_imag_abs = eigs.iter().fold(T::zero(), |m, z| m.max(z.im.abs()));
    let kind = if max_imag_abs > tol * scale {
        SpectrumKind::SomeComplex
    } else if min_real > tol * scale {
        SpectrumKind::AllRealPositive
    } else {
        SpectrumKind::AllRealMixedSign
    };
    SpectrumClass {
        kind,
        min_real,
        max_imag_abs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cplx, re};

    #[test]
    fn positive_pair() {
        let c = classify_spectrum(&[re(1.0), re(3.0)], 1e-8);
        assert_eq!(c.kind, SpectrumKind::AllRealPositive);
        assert_eq!(c.min_real, 1.0);
        assert_eq!(c.max_imag_abs, 0.0);
    }

    #[test]
    fn rho_one_metric_past_two_is_mixed() {
        let t: f64 = 2.5;
        let c = classify_spectrum(&[re(4.0 - t * t), re(t * t)], 1e-8);
        assert_eq!(c.kind, SpectrumKind::AllRealMixedSign);
        assert!(c.min_real < 0.0);
    }

    #[test]
    fn complex_and_zero() {
        let c = classify_spectrum(&[cplx(13.0, 7.48), cplx(13.0, -7.48)], 1e-8);
        assert_eq!(c.kind, SpectrumKind::SomeComplex);
        let z = classify_spectrum(&[re(0.0), re(8.0)], 1e-8);
        assert_eq!(z.kind, SpectrumKind::AllRealMixedSign);
    }
}
