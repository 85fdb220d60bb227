//! Model domains: membership, Minkowski functionals, volumes and monomial
//! norms.
//!
//! A complex ellipsoid here is `{ z : sum_j |z_j / R_j|^(2 p_j) < 1 }` with
//! `p_j > 0`; it is convex exactly when every `p_j >= 1/2`. Ball and
//! polydisk are kept as separate variants because their formulas are used
//! as oracles for the ellipsoid code paths.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{estimate_fraction, find_root_monotone, gamma, ln_gamma, SampleStream, Tolerance};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DomainSpec<T = f64> {
    Ellipsoid {
        p: Vec<T>,
        #[serde(default)]
        radii: Vec<T>,
    },
    Annulus {
        r: T,
    },
    Ball {
        n: usize,
    },
    Polydisk {
        n: usize,
    },
    SymmetrizedBidisk,
}

/// Samples used by [`volume`] for domains without a closed form.
pub const DEFAULT_VOLUME_SAMPLES: usize = 1 << 20;

impl<T: Real> DomainSpec<T> {
    /// Ellipsoid with unit radii.
    pub fn ellipsoid(p: Vec<T>) -> Result<Self> {
        let radii = vec![T::one(); p.len()];
        Self::ellipsoid_with_radii(p, radii)
    }

    pub fn ellipsoid_with_radii(p: Vec<T>, radii: Vec<T>) -> Result<Self> {
        let spec = DomainSpec::Ellipsoid { p, radii };
        spec.validate()?;
        Ok(spec)
    }

    pub fn annulus(r: T) -> Result<Self> {
        let spec = DomainSpec::Annulus { r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn disk() -> Self {
        DomainSpec::Ball { n: 1 }
    }

    /// Parses a JSON object `{"variant": ..., "p": [...], "radii": [...], "r": ...}`.
    /// A missing `radii` list means unit radii.
    pub fn from_json(text: &str) -> Result<Self>
    where
        T: serde::de::DeserializeOwned,
    {
        let mut spec: DomainSpec<T> =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("domain spec: {e}")))?;
        if let DomainSpec::Ellipsoid { p, radii } = &mut spec {
            if radii.is_empty() {
                *radii = vec![T::one(); p.len()];
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string(self).expect("domain spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Ellipsoid { p, radii } => {
                if p.is_empty() {
                    return Err(Error::InvalidParameter("ellipsoid needs at least one exponent".into()));
                }
                if radii.len() != p.len() {
                    return Err(Error::DimensionMismatch {
                        expected: p.len(),
                        got: radii.len(),
                    });
                }
                if p.iter().any(|&pj| !(pj > T::zero()) || !pj.is_finite()) {
                    return Err(Error::InvalidParameter("ellipsoid exponents must be positive".into()));
                }
                if radii.iter().any(|&rj| !(rj > T::zero()) || !rj.is_finite()) {
                    return Err(Error::InvalidParameter("ellipsoid radii must be positive".into()));
                }
            }
            DomainSpec::Annulus { r } => {
                if !(*r > T::zero() && *r < T::one()) {
                    return Err(Error::InvalidParameter(format!(
                        "annulus inner radius must lie in (0, 1), got {}",
                        r.to_f64_lossy()
                    )));
                }
            }
            DomainSpec::Ball { n } | DomainSpec::Polydisk { n } => {
                if *n == 0 {
                    return Err(Error::InvalidParameter("dimension must be positive".into()));
                }
            }
            DomainSpec::SymmetrizedBidisk => {}
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Ellipsoid { p, .. } => p.len(),
            DomainSpec::Annulus { .. } => 1,
            DomainSpec::Ball { n } | DomainSpec::Polydisk { n } => *n,
            DomainSpec::SymmetrizedBidisk => 2,
        }
    }

    /// Balanced about the origin.
    pub fn is_balanced(&self) -> bool {
        matches!(
            self,
            DomainSpec::Ellipsoid { .. } | DomainSpec::Ball { .. } | DomainSpec::Polydisk { .. }
        )
    }

    pub fn is_convex(&self) -> bool {
        match self {
            DomainSpec::Ellipsoid { p, .. } => p.iter().all(|&pj| pj >= T::lit(0.5)),
            DomainSpec::Ball { .. } | DomainSpec::Polydisk { .. } => true,
            _ => false,
        }
    }

    /// Exponents and radii of the equivalent ellipsoid, for the balanced
    /// Reinhardt variants with a product formula. Polydisks have none.
    pub fn ellipsoid_data(&self) -> Option<(Vec<T>, Vec<T>)> {
        match self {
            DomainSpec::Ellipsoid { p, radii } => Some((p.clone(), radii.clone())),
            DomainSpec::Ball { n } => Some((vec![T::one(); *n], vec![T::one(); *n])),
            _ => None,
        }
    }

    /// Half-widths of a coordinate box containing the domain.
    pub fn bounding_radii(&self) -> Vec<T> {
        match self {
            DomainSpec::Ellipsoid { radii, .. } => radii.clone(),
            DomainSpec::Annulus { .. } => vec![T::one()],
            DomainSpec::Ball { n } | DomainSpec::Polydisk { n } => vec![T::one(); *n],
            DomainSpec::SymmetrizedBidisk => vec![T::lit(2.0), T::one()],
        }
    }
}

fn check_dim<T: Real>(domain: &DomainSpec<T>, z: &[Complex<T>]) -> Result<()> {
    let n = domain.dimension();
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.len(),
        });
    }
    Ok(())
}

/// Roots of `zeta^2 - s zeta + q = 0`.
pub fn symmetrized_preimage<T: Real>(s: Complex<T>, q: Complex<T>) -> (Complex<T>, Complex<T>) {
    let two = T::lit(2.0);
    let disc = (s * s - q * T::lit(4.0)).sqrt();
    ((s + disc) / two, (s - disc) / two)
}

pub fn contains<T: Real>(domain: &DomainSpec<T>, z: &[Complex<T>]) -> Result<bool> {
    check_dim(domain, z)?;
    let one = T::one();
    Ok(match domain {
        DomainSpec::Ellipsoid { p, radii } => {
            let s: T = z
                .iter()
                .zip(p.iter().zip(radii))
                .map(|(zj, (&pj, &rj))| (zj.norm() / rj).powf(T::lit(2.0) * pj))
                .sum();
            s < one
        }
        DomainSpec::Ball { .. } => z.iter().map(|zj| zj.norm_sqr()).sum::<T>() < one,
        DomainSpec::Polydisk { .. } => z.iter().all(|zj| zj.norm() < one),
        DomainSpec::Annulus { r } => {
            let m = z[0].norm();
            m > *r && m < one
        }
        DomainSpec::SymmetrizedBidisk => {
            let (a, b) = symmetrized_preimage(z[0], z[1]);
            a.norm() < one && b.norm() < one
        }
    })
}

/// Minkowski functional `h` of a balanced domain: `z / h(z)` lies on the
/// boundary, and `log h` is the pluricomplex Green function with pole 0.
pub fn minkowski_functional<T: Real>(domain: &DomainSpec<T>, z: &[Complex<T>]) -> Result<T> {
    check_dim(domain, z)?;
    if z.iter().all(|zj| zj.norm() == T::zero()) {
        return Ok(T::zero());
    }
    match domain {
        DomainSpec::Ball { .. } => Ok(z.iter().map(|zj| zj.norm_sqr()).sum::<T>().sqrt()),
        DomainSpec::Polydisk { .. } => Ok(z.iter().map(|zj| zj.norm()).fold(T::zero(), T::max)),
        DomainSpec::Ellipsoid { p, radii } => {
            let scaled: Vec<(T, T)> = z
                .iter()
                .zip(p.iter().zip(radii))
                .map(|(zj, (&pj, &rj))| (zj.norm() / rj, T::lit(2.0) * pj))
                .collect();
            let f = |s: T| scaled.iter().map(|&(x, e)| (x / s).powf(e)).sum::<T>() - T::one();
            let hi = scaled.iter().map(|&(x, _)| x).sum::<T>() + T::one();
            let lo = hi * T::epsilon();
            find_root_monotone(f, lo, hi, &Tolerance::machine())
        }
        _ => Err(Error::Unsupported(
            "Minkowski functional needs a balanced domain".into(),
        )),
    }
}

/// Lebesgue volume.
///
/// Ellipsoids: `pi^n prod_j R_j^2 Gamma(1 + 1/p_j) / Gamma(1 + sum_j 1/p_j)`.
/// The symmetrized bidisk has no closed form here and is estimated by hit
/// counting with [`DEFAULT_VOLUME_SAMPLES`] low-discrepancy points.
pub fn volume<T: Real>(domain: &DomainSpec<T>) -> Result<T> {
    domain.validate()?;
    let pi = T::PI();
    match domain {
        DomainSpec::Ellipsoid { p, radii } => {
            let n = p.len() as i32;
            let mut num = T::one();
            let mut total = T::zero();
            for (&pj, &rj) in p.iter().zip(radii) {
                num = num * rj * rj * gamma(T::one() + pj.recip());
                total = total + pj.recip();
            }
            Ok(pi.powi(n) * num / gamma(T::one() + total))
        }
        DomainSpec::Ball { n } => Ok(pi.powi(*n as i32) / gamma(T::from_count(*n + 1))),
        DomainSpec::Polydisk { n } => Ok(pi.powi(*n as i32)),
        DomainSpec::Annulus { r } => Ok(pi * (T::one() - *r * *r)),
        DomainSpec::SymmetrizedBidisk => {
            let stream = SampleStream::low_discrepancy(4, 0);
            volume_monte_carlo(domain, &stream, DEFAULT_VOLUME_SAMPLES).map(|(v, _)| v)
        }
    }
}

/// Hit-counting volume estimate over the bounding box, with standard error.
pub fn volume_monte_carlo<T: Real>(
    domain: &DomainSpec<T>,
    stream: &SampleStream,
    count: usize,
) -> Result<(T, T)> {
    domain.validate()?;
    let n = domain.dimension();
    if stream.dimension != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: stream.dimension,
        });
    }
    let half: Vec<f64> = domain.bounding_radii().iter().map(|r| r.to_f64_lossy()).collect();
    let box_volume: f64 = half.iter().map(|h| 4.0 * h * h).product();
    let (frac, se) = estimate_fraction(stream, count, |u| {
        let z: Vec<Complex<T>> = (0..n)
            .map(|j| {
                Complex::new(
                    T::lit(half[j] * (2.0 * u[2 * j] - 1.0)),
                    T::lit(half[j] * (2.0 * u[2 * j + 1] - 1.0)),
                )
            })
            .collect();
        contains(domain, &z).unwrap_or(false)
    });
    Ok((T::lit(box_volume * frac), T::lit(box_volume * se)))
}

/// `ln ||z^alpha||^2` over a balanced Reinhardt domain (non-negative
/// multi-index).
pub fn ln_monomial_norm<T: Real>(domain: &DomainSpec<T>, alpha: &[u32]) -> Result<T> {
    if alpha.len() != domain.dimension() {
        return Err(Error::DimensionMismatch {
            expected: domain.dimension(),
            got: alpha.len(),
        });
    }
    let pi = T::PI();
    let two = T::lit(2.0);
    match domain {
        DomainSpec::Polydisk { .. } => Ok(alpha
            .iter()
            .map(|&a| pi.ln() - T::from_count(a as usize + 1).ln())
            .sum()),
        DomainSpec::Annulus { .. } => monomial_norm(domain, &[alpha[0] as i64]).map(|v| v.ln()),
        DomainSpec::Ellipsoid { .. } | DomainSpec::Ball { .. } => {
            let (p, radii) = domain.ellipsoid_data().expect("ellipsoid data");
            let n = T::from_count(p.len());
            let mut acc = n * pi.ln();
            let mut total = T::zero();
            for ((&a, &pj), &rj) in alpha.iter().zip(&p).zip(&radii) {
                let e = (T::from_count(a as usize) + T::one()) / pj;
                acc = acc + (two * T::from_count(a as usize) + two) * rj.ln() + ln_gamma(e) - pj.ln();
                total = total + e;
            }
            Ok(acc - ln_gamma(T::one() + total))
        }
        DomainSpec::SymmetrizedBidisk => Err(Error::Unsupported(
            "the symmetrized bidisk is not a Reinhardt domain".into(),
        )),
    }
}

/// `||z^alpha||^2 = integral over the domain of |z^alpha|^2`.
///
/// Annulus `r < |z| < 1` takes a signed exponent `j`:
/// `pi (1 - r^(2j+2)) / (j+1)` for `j != -1`, and `-2 pi log r` for `j = -1`.
pub fn monomial_norm<T: Real>(domain: &DomainSpec<T>, alpha: &[i64]) -> Result<T> {
    if alpha.len() != domain.dimension() {
        return Err(Error::DimensionMismatch {
            expected: domain.dimension(),
            got: alpha.len(),
        });
    }
    if let DomainSpec::Annulus { r } = domain {
        let pi = T::PI();
        let j = alpha[0];
        return Ok(if j == -1 {
            -T::lit(2.0) * pi * r.ln()
        } else {
            let jp1 = T::from_i64(j + 1).expect("exponent fits");
            // (1 - r^(2j+2)) / (j+1), stable for both signs of j+1
            let x = T::lit(2.0) * jp1 * r.ln();
            pi * -x.exp_m1() / jp1
        });
    }
    if alpha.iter().any(|&a| a < 0) {
        return Err(Error::InvalidParameter(
            "negative exponents are only meaningful on the annulus".into(),
        ));
    }
    if alpha.iter().all(|&a| a == 0) {
        return volume(domain);
    }
    let unsigned: Vec<u32> = alpha.iter().map(|&a| a as u32).collect();
    ln_monomial_norm(domain, &unsigned).map(T::exp)
}

/// Angular factor `integral_0^{2 pi} e^{i k theta} d theta`: `2 pi` for
/// `k = 0` and exactly zero otherwise. Distinct monomials on a Reinhardt
/// domain are orthogonal because some coordinate contributes this factor
/// with `k != 0`.
pub fn angular_factor<T: Real>(k: i64) -> T {
    if k == 0 {
        T::lit(2.0) * T::PI()
    } else {
        T::zero()
    }
}

/// The one-parameter family `{ |z_1| + |z_2|^(2m) + ... + |z_n|^(2m) < 1 }`
/// evaluated at the axis point `(b, 0, ..., 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidFamilyParams<T = f64> {
    pub m: T,
    pub n: usize,
    pub b: T,
}

impl<T: Real> EllipsoidFamilyParams<T> {
    pub fn new(m: T, n: usize, b: T) -> Result<Self> {
        if !(m >= T::lit(0.5)) {
            return Err(Error::InvalidParameter("m must be >= 1/2".into()));
        }
        if n < 2 {
            return Err(Error::InvalidParameter("n must be >= 2".into()));
        }
        if !(b > T::zero() && b < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "b must lie in (0, 1), got {}",
                b.to_f64_lossy()
            )));
        }
        Ok(EllipsoidFamilyParams { m, n, b })
    }

    /// `a = (n - 1)/m + 2`.
    pub fn a(&self) -> T {
        T::from_count(self.n - 1) / self.m + T::lit(2.0)
    }

    /// Volume of `{ |z_1|^(2m) + ... + |z_{n-1}|^(2m) < 1 }` in `C^(n-1)`.
    pub fn omega(&self) -> T {
        let k = self.n - 1;
        T::PI().powi(k as i32) * gamma(T::one() + self.m.recip()).powi(k as i32)
            / gamma(T::one() + T::from_count(k) / self.m)
    }

    /// `2 pi omega / (a (a - 1))`.
    pub fn domain_volume(&self) -> T {
        let a = self.a();
        T::lit(2.0) * T::PI() * self.omega() / (a * (a - T::one()))
    }

    pub fn domain(&self) -> DomainSpec<T> {
        let mut p = vec![self.m; self.n];
        p[0] = T::lit(0.5);
        DomainSpec::Ellipsoid {
            radii: vec![T::one(); self.n],
            p,
        }
    }

    pub fn base_point(&self) -> Vec<Complex<T>> {
        let mut w = vec![Complex::new(T::zero(), T::zero()); self.n];
        w[0] = Complex::new(self.b, T::zero());
        w
    }
}
