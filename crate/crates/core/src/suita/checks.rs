use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::bergman::{kernel_annulus, kernel_reinhardt, KernelValue};
use crate::domains::DomainSpec;
use crate::error::{Error, Result};
use crate::green1d::{
    normalized_sublevel_volume_balanced, robin_capacity, solve_green_annulus, sublevel_volume, GreenSeries1D,
};
use crate::numerics::{SampleStream, Tolerance};
use crate::scalar::Real;

/// `K(w) - 1 / (e^(-2nt) lambda({G < t}))` with its propagated sampling error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundMargin<T = f64> {
    pub level: T,
    pub kernel: T,
    pub normalized_volume: T,
    pub margin: T,
    pub sigma: T,
}

impl<T: Real> LowerBoundMargin<T> {
    /// `margin >= -k sigma`.
    pub fn holds(&self, k: T) -> bool {
        self.margin >= -k * self.sigma
    }
}

/// Checks `K(w) >= 1 / (e^(-2nt) lambda({G_w < t}))`.
///
/// Balanced domains at the origin use the exact sublevel volume; planar
/// disks and annuli use hit counting with `count` points from `stream`.
pub fn check_lower_bound_est1<T: Real>(
    domain: &DomainSpec<T>,
    w: &[Complex<T>],
    t: T,
    stream: &SampleStream,
    count: usize,
    tol: &Tolerance<T>,
) -> Result<LowerBoundMargin<T>> {
    domain.validate()?;
    if w.len() != domain.dimension() {
        return Err(Error::DimensionMismatch {
            expected: domain.dimension(),
            got: w.len(),
        });
    }
    let balanced_center = domain.is_balanced() && w.iter().all(|z| z.norm() == T::zero());
    if balanced_center {
        let kernel = kernel_reinhardt(domain, w, tol)?.value;
        let normalized = normalized_sublevel_volume_balanced(domain, t)?;
        return Ok(LowerBoundMargin {
            level: t,
            kernel,
            normalized_volume: normalized,
            margin: kernel - normalized.recip(),
            sigma: T::zero(),
        });
    }
    let (green, kernel): (GreenSeries1D<T>, KernelValue<T>) = match domain {
        DomainSpec::Annulus { r } => (solve_green_annulus(*r, w[0], tol)?, kernel_annulus(*r, w[0], tol)?),
        DomainSpec::Ball { n: 1 } => (GreenSeries1D::disk(w[0])?, kernel_reinhardt(domain, w, tol)?),
        _ => {
            return Err(Error::Unsupported(
                "sublevel volumes need a balanced domain at its center or a planar domain".into(),
            ))
        }
    };
    let est = sublevel_volume(&green, t, stream, count)?;
    if !est.resolved {
        return Err(Error::Unresolved(format!(
            "sublevel volume at t = {} not resolved by {count} samples",
            t.to_f64_lossy()
        )));
    }
    let scale = (-T::lit(2.0) * t).exp();
    let v = scale * est.value;
    let sv = scale * est.std_error;
    Ok(LowerBoundMargin {
        level: t,
        kernel: kernel.value,
        normalized_volume: v,
        margin: kernel.value - v.recip(),
        sigma: sv / (v * v),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReverseSuita<T = f64> {
    pub r: T,
    pub kernel: T,
    pub capacity: T,
    /// `K(sqrt r) / c(sqrt r)^2`.
    pub ratio: T,
    /// `-2 log r / pi^3`.
    pub bound: T,
    /// `ratio >= bound`.
    pub holds: bool,
    /// `c^2 < pi K`.
    pub suita_holds: bool,
}

/// Compares `K / c^2` at `w = sqrt r` on `{ r < |z| < 1 }` with the lower
/// bound `-2 log r / pi^3`, which is unbounded as `r -> 0`.
pub fn check_reverse_suita<T: Real>(r: T, tol: &Tolerance<T>) -> Result<ReverseSuita<T>> {
    DomainSpec::annulus(r)?;
    let w = Complex::new(r.sqrt(), T::zero());
    let kernel = kernel_annulus(r, w, tol)?.value;
    let capacity = robin_capacity(&solve_green_annulus(r, w, tol)?);
    let ratio = kernel / (capacity * capacity);
    let bound = -T::lit(2.0) * r.ln() / T::PI().powi(3);
    Ok(ReverseSuita {
        r,
        kernel,
        capacity,
        ratio,
        bound,
        holds: ratio >= bound,
        suita_holds: capacity * capacity < T::PI() * kernel,
    })
}
