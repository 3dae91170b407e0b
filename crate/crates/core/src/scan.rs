//! Regime classification of `Theta_rho(t)` along a parameter sweep,
//! boundary location by bisection, and exceptional-point probing.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{eig_general, eig_hermitian, numeric_rank, ComplexMatrix, LinalgError};
use crate::metric::theta_rho_product;
use crate::models::Model;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeKind {
    UnitaryMetric,
    KreinPseudoMetric,
    ComplexSpectrum,
    SingularMetric,
}

impl RegimeKind {
    pub fn label(self) -> &'static str {
        match self {
            RegimeKind::UnitaryMetric => "unitary",
            RegimeKind::KreinPseudoMetric => "krein",
            RegimeKind::ComplexSpectrum => "complex",
            RegimeKind::SingularMetric => "singular",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct RegimeClassification<T> {
    pub kind: RegimeKind,
    /// Eigenvalues responsible for the verdict (the lowest one when unitary).
    pub witness: Vec<Complex<T>>,
    /// Whether `Theta_rho` itself passed the Hermiticity test.
    pub hermitian: bool,
}

/// Sorted spectrum of `Theta_rho(t) = Theta_0(t) H(t)^rho`.
///
/// Uses the Hermitian solver when the matrix is Hermitian to `tol`, the
/// general one otherwise. Beyond `|t| = 1` the toy-model metrics are complex
/// symmetric rather than Hermitian, but can still have a real spectrum.
pub fn metric_spectrum<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    rho: u32,
    t: T,
    tol: T,
) -> Result<(Vec<Complex<T>>, bool), LinalgError> {
    let h = model.hamiltonian(t);
    let theta = theta_rho_product(&model.metric0(t), &h, rho);
    spectrum_of(&theta, tol)
}

fn spectrum_of<T: Real>(
    theta: &ComplexMatrix<T>,
    tol: T,
) -> Result<(Vec<Complex<T>>, bool), LinalgError> {
    let hermitian = theta.hermiticity_defect() <= tol;
    let eigs = if hermitian {
        eig_hermitian(theta, tol)?.eigenvalues
    } else {
        eig_general(theta, tol)?.eigenvalues
    };
    Ok((eigs, hermitian))
}

/// Classification with a relative zero band of width `zero_tol`.
fn classify_eigs<T: Real>(
    eigs: &[Complex<T>],
    hermitian: bool,
    tol: T,
    zero_tol: T,
) -> RegimeClassification<T> {
    let scale = eigs.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    let complex: Vec<_> = eigs
        .iter()
        .copied()
        .filter(|z| z.im.abs() > tol * scale)
        .collect();
    let (kind, witness) = if !complex.is_empty() {
        (RegimeKind::ComplexSpectrum, complex)
    } else {
        let smallest = eigs
            .iter()
            .copied()
            .min_by(|a, b| a.re.abs().partial_cmp(&b.re.abs()).expect("finite"))
            .expect("nonempty spectrum");
        let negative: Vec<_> = eigs.iter().copied().filter(|z| z.re < T::zero()).collect();
        if smallest.re.abs() <= zero_tol * scale {
            (RegimeKind::SingularMetric, vec![smallest])
        } else if !negative.is_empty() {
            (RegimeKind::KreinPseudoMetric, negative)
        } else {
            let lowest = eigs
                .iter()
                .copied()
                .min_by(|a, b| a.re.partial_cmp(&b.re).expect("finite"))
                .expect("nonempty spectrum");
            (RegimeKind::UnitaryMetric, vec![lowest])
        }
    };
    RegimeClassification {
        kind,
        witness,
        hermitian,
    }
}

/// Regime of `Theta_rho(t)`.
///
/// Complex if some `|Im theta| > tol * scale`, singular if the smallest
/// `|theta| <= tol * scale`, Krein if any eigenvalue is negative, unitary
/// otherwise; `scale = max |theta|`.
pub fn classify_point<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    rho: u32,
    t: T,
    tol: T,
) -> Result<RegimeClassification<T>, LinalgError> {
    let (eigs, hermitian) = metric_spectrum(model, rho, t, tol)?;
    Ok(classify_eigs(&eigs, hermitian, tol, tol))
}

/// Same as [`classify_point`] but with no zero band, so only an exactly
/// vanishing eigenvalue is singular. Used to pin sign changes.
pub fn classify_strict<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    rho: u32,
    t: T,
    tol: T,
) -> Result<RegimeKind, LinalgError> {
    let (eigs, hermitian) = metric_spectrum(model, rho, t, tol)?;
    Ok(classify_eigs(&eigs, hermitian, tol, T::zero()).kind)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary<T> {
    pub t: T,
    pub from: RegimeKind,
    pub to: RegimeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ScanReport<T> {
    pub model: String,
    pub rho: u32,
    pub t_grid: Vec<T>,
    pub eigen_traces: Vec<Vec<Complex<T>>>,
    pub classifications: Vec<RegimeClassification<T>>,
    pub boundaries: Vec<Boundary<T>>,
}

#[derive(Clone, Debug)]
pub struct ScanOptions {
    /// Coarse grid size for [`boundary_scan`].
    pub grid_points: usize,
    /// Points with `|t|` below this are skipped (the metric is singular at
    /// the exceptional point `t = 0`).
    pub exclusion: f64,
    /// Relative classification tolerance.
    pub tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid_points: 400,
            exclusion: 1e-4,
            tol: crate::linalg::DEFAULT_CLASSIFY_TOL,
        }
    }
}

/// Classifies every grid point. Points are evaluated in parallel and
/// collected in grid order.
pub fn scan<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    rho: u32,
    grid: &[T],
    tol: T,
) -> Result<ScanReport<T>, LinalgError> {
    let points: Vec<(Vec<Complex<T>>, RegimeClassification<T>)> = grid
        .par_iter()
        .map(|&t| {
            let (eigs, hermitian) = metric_spectrum(model, rho, t, tol)?;
            let class = classify_eigs(&eigs, hermitian, tol, tol);
            Ok((eigs, class))
        })
        .collect::<Result<_, LinalgError>>()?;
    let mut boundaries = Vec::new();
    for (i, w) in points.windows(2).enumerate() {
        if w[0].1.kind != w[1].1.kind {
            boundaries.push(Boundary {
                t: (grid[i] + grid[i + 1]) * T::lit(0.5),
                from: w[0].1.kind,
                to: w[1].1.kind,
            });
        }
    }
    let (eigen_traces, classifications) = points.into_iter().unzip();
    Ok(ScanReport {
        model: model.name().to_string(),
        rho,
        t_grid: grid.to_vec(),
        eigen_traces,
        classifications,
        boundaries,
    })
}

/// Boundaries on `[t_lo, t_hi]` with the default [`ScanOptions`].
pub fn boundary_scan<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    rho: u32,
    t_lo: T,
    t_hi: T,
    tol_t: T,
) -> Result<Vec<Boundary<T>>, LinalgError> {
    boundary_scan_with(model, rho, t_lo, t_hi, tol_t, &ScanOptions::default())
}

/// Locates every classification change on `[t_lo, t_hi]`.
///
/// A coarse grid brackets the changes; each bracket is then bisected to
/// width `tol_t`. Sign changes are bisected without a zero band so the
/// result sits on the actual zero crossing. An empty result means the
/// classification is constant on the grid.
pub fn boundary_scan_with<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    rho: u32,
    t_lo: T,
    t_hi: T,
    tol_t: T,
    opts: &ScanOptions,
) -> Result<Vec<Boundary<T>>, LinalgError> {
    assert!(t_lo < t_hi, "boundary_scan needs t_lo < t_hi");
    assert!(tol_t > T::zero(), "boundary_scan needs tol_t > 0");
    let n = opts.grid_points.max(2);
    let tol = T::lit(opts.tol);
    let excl = T::lit(opts.exclusion);
    let step = (t_hi - t_lo) / T::lit((n - 1) as f64);
    let grid: Vec<T> = (0..n)
        .map(|i| {
            if i == n - 1 {
                t_hi
            } else {
                t_lo + step * T::lit(i as f64)
            }
        })
        .collect();
    let kinds: Vec<Option<RegimeKind>> = grid
        .par_iter()
        .map(|&t| {
            if t.abs() < excl {
                Ok(None)
            } else {
                classify_point(model, rho, t, tol).map(|c| Some(c.kind))
            }
        })
        .collect::<Result<_, LinalgError>>()?;

    // maximal blocks of equal kind, split wherever a point is excluded
    let mut runs: Vec<Vec<(RegimeKind, usize, usize)>> = Vec::new();
    let mut current: Vec<(RegimeKind, usize, usize)> = Vec::new();
    for (i, k) in kinds.iter().enumerate() {
        match (*k, current.last_mut()) {
            (None, _) => {
                if !current.is_empty() {
                    runs.push(std::mem::take(&mut current));
                }
            }
            (Some(k), Some(last)) if last.0 == k => last.2 = i,
            (Some(k), _) => current.push((k, i, i)),
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }

    let sing = RegimeKind::SingularMetric;
    let edge = |a: RegimeKind, lo: usize, hi: usize| {
        bisect(grid[lo], grid[hi], tol_t, |t| {
            Ok(classify_point(model, rho, t, tol)?.kind == a)
        })
    };
    let crossing = |lo: usize, hi: usize| -> Result<T, LinalgError> {
        let sa = classify_strict(model, rho, grid[lo], tol)?;
        bisect(grid[lo], grid[hi], tol_t, |t| {
            Ok(classify_strict(model, rho, t, tol)? == sa)
        })
    };
    let mut out = Vec::new();
    for blocks in runs {
        let mut j = 0;
        while j + 1 < blocks.len() {
            let (a, _, a_end) = blocks[j];
            let (b, b_start, b_end) = blocks[j + 1];
            if a == sing {
                out.push(Boundary {
                    t: edge(a, a_end, b_start)?,
                    from: a,
                    to: b,
                });
                j += 1;
            } else if b != sing {
                out.push(Boundary {
                    t: crossing(a_end, b_start)?,
                    from: a,
                    to: b,
                });
                j += 1;
            } else if let Some(&(c, c_start, _)) = blocks.get(j + 2) {
                if c == a {
                    // isolated touch of zero
                    out.push(Boundary {
                        t: edge(a, a_end, b_start)?,
                        from: a,
                        to: b,
                    });
                    out.push(Boundary {
                        t: edge(b, b_end, c_start)?,
                        from: b,
                        to: c,
                    });
                } else {
                    // sign change through a flat zero: one transition a -> c
                    out.push(Boundary {
                        t: crossing(a_end, c_start)?,
                        from: a,
                        to: c,
                    });
                }
                j += 2;
            } else {
                out.push(Boundary {
                    t: edge(a, a_end, b_start)?,
                    from: a,
                    to: b,
                });
                j += 1;
            }
        }
    }
    Ok(out)
}

/// Shrinks `[lo, hi]` around the point where `left(t)` stops holding.
fn bisect<T: Real>(
    mut lo: T,
    mut hi: T,
    tol_t: T,
    mut left: impl FnMut(T) -> Result<bool, LinalgError>,
) -> Result<T, LinalgError> {
    let half = T::lit(0.5);
    while hi - lo > tol_t {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if left(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * half)
}

/// End of the unitarity interval: the first boundary leaving
/// [`RegimeKind::UnitaryMetric`] for good.
///
/// An excursion unitary -> singular -> unitary is an isolated touch of
/// zero (even powers of a vanishing factor) and is skipped.
pub fn unitarity_limit<T: Real>(boundaries: &[Boundary<T>]) -> Option<Boundary<T>> {
    let mut i = 0;
    while i < boundaries.len() {
        let b = boundaries[i];
        if b.from == RegimeKind::UnitaryMetric {
            let touch = b.to == RegimeKind::SingularMetric
                && boundaries
                    .get(i + 1)
                    .is_some_and(|n| n.to == RegimeKind::UnitaryMetric);
            if touch {
                i += 2;
                continue;
            }
            return Some(b);
        }
        i += 1;
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct EpReport<T> {
    pub t_ep: T,
    pub eigvec_condition: T,
    pub min_gap: T,
    pub metric_rank: usize,
    /// `min_gap <= tol` and `eigvec_condition >= 1 / tol`.
    pub is_ep: bool,
}

/// Locates the smallest eigenvalue gap of `H(t)` on
/// `[t_center - radius, t_center + radius]` by golden-section search.
///
/// Near a Jordan block the eigensolver reports an exact zero gap on a small
/// window; the centre of that window is returned in that case.
pub fn ep_probe<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    t_center: T,
    radius: T,
    tol: T,
) -> Result<EpReport<T>, LinalgError> {
    assert!(radius > T::zero(), "ep_probe needs radius > 0");
    let gap =
        |t: T| -> Result<T, LinalgError> { Ok(eig_general(&model.hamiltonian(t), tol)?.min_gap()) };
    let (a0, b0) = (t_center - radius, t_center + radius);
    let resolution = T::unit_roundoff().sqrt() * T::lit(1e-4) * (T::one() + t_center.abs());
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let (mut a, mut b) = (a0, b0);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut fc, mut fd) = (gap(c)?, gap(d)?);
    let mut anchor = None;
    while b - a > resolution {
        if fc == T::zero() || fd == T::zero() {
            anchor = Some(if fc == T::zero() { c } else { d });
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = gap(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = gap(d)?;
        }
    }
    let t_ep = match anchor {
        None => (a + b) * T::lit(0.5),
        Some(z) => {
            let zero = |t: T| -> Result<bool, LinalgError> { Ok(gap(t)? == T::zero()) };
            let left = if zero(a0)? {
                a0
            } else {
                bisect(a0, z, resolution, |t| Ok(!zero(t)?))?
            };
            let right = if zero(b0)? {
                b0
            } else {
                bisect(z, b0, resolution, zero)?
            };
            (left + right) * T::lit(0.5)
        }
    };
    let eig = eig_general(&model.hamiltonian(t_ep), tol)?;
    let min_gap = eig.min_gap();
    let metric_rank = numeric_rank(&model.metric0(t_ep), tol);
    Ok(EpReport {
        t_ep,
        eigvec_condition: eig.condition,
        min_gap,
        metric_rank,
        is_ep: min_gap <= tol && eig.condition * tol >= T::one(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ToyModel;

    #[test]
    fn classification_examples() {
        let m = ToyModel::TwoLevel;
        let k = |rho, t: f64| classify_point(&m, rho, t, 1e-8).unwrap().kind;
        assert_eq!(k(0, 0.5), RegimeKind::UnitaryMetric);
        assert_eq!(k(1, 3.0), RegimeKind::KreinPseudoMetric);
        assert_eq!(k(2, 3.0), RegimeKind::ComplexSpectrum);
        assert_eq!(k(0, 0.0), RegimeKind::SingularMetric);
    }

    #[test]
    fn rho_zero_boundary() {
        let b = boundary_scan(&ToyModel::TwoLevel, 0, 0.0_f64, 2.0, 1e-11).unwrap();
        let lim = unitarity_limit(&b).unwrap();
        assert!((lim.t - 1.0).abs() < 1e-9, "{lim:?}");
        assert_eq!(lim.to, RegimeKind::ComplexSpectrum);
    }

    #[test]
    fn touch_pairs_are_skipped() {
        let u = RegimeKind::UnitaryMetric;
        let s = RegimeKind::SingularMetric;
        let c = RegimeKind::ComplexSpectrum;
        let b = [
            Boundary {
                t: 2.0,
                from: u,
                to: s,
            },
            Boundary {
                t: 2.01,
                from: s,
                to: u,
            },
            Boundary {
                t: 2.9,
                from: u,
                to: c,
            },
        ];
        assert_eq!(unitarity_limit(&b).unwrap().t, 2.9);
        assert!(unitarity_limit::<f64>(&[]).is_none());
    }

    #[test]
    fn probe_away_from_ep() {
        let r = ep_probe(&ToyModel::TwoLevel, 0.5_f64, 0.1, 1e-6).unwrap();
        assert!((r.min_gap - 0.8).abs() < 1e-6);
        assert!(!r.is_ep);
        assert_eq!(r.metric_rank, 2);
    }
}
