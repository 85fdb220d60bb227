//! Diagonal Bergman kernel values.
//!
//! On a Reinhardt domain the monomials are an orthogonal basis of the
//! Bergman space, so `K(w) = sum_alpha |w^alpha|^2 / ||z^alpha||^2`. The
//! closed forms below cover the ellipsoid families used by the inequality
//! checks.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::domains::{contains, ln_monomial_norm, volume, DomainSpec, EllipsoidFamilyParams};
use crate::error::{Error, Result};
use crate::numerics::Tolerance;
use crate::scalar::Real;

const MAX_DEGREE: usize = 1_000_000;
const MAX_TERMS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMethod {
    MonomialSeries,
    AnnulusSeries,
    ClosedForm,
    Deflation,
    /// A tabulated constant with no independent computation here.
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue<T = f64> {
    pub value: T,
    pub method: KernelMethod,
    /// Bound (or estimate, for the monomial series) on the truncation error.
    pub error_bound: T,
}

impl<T: Real> KernelValue<T> {
    fn exact(value: T, method: KernelMethod) -> Self {
        KernelValue {
            value,
            method,
            error_bound: T::zero(),
        }
    }

    /// Whether two computations agree within their combined error plus
    /// `rel` relative slack.
    pub fn agrees_with(&self, other: &KernelValue<T>, rel: T) -> bool {
        let slack = self.error_bound + other.error_bound + rel * self.value.abs().max(other.value.abs());
        (self.value - other.value).abs() <= slack
    }
}

fn for_each_composition(total: u32, parts: usize, prefix: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
    if parts == 1 {
        prefix.push(total);
        visit(prefix);
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        for_each_composition(total - first, parts - 1, prefix, visit);
        prefix.pop();
    }
}

/// Monomial series for ellipsoids, balls and polydisks, summed in blocks of
/// equal total degree. Summation stops once the geometric extrapolation of
/// the decaying block sums falls below `tol.bound(partial)`.
pub fn kernel_reinhardt<T: Real>(domain: &DomainSpec<T>, w: &[Complex<T>], tol: &Tolerance<T>) -> Result<KernelValue<T>> {
    tol.validate()?;
    match domain {
        DomainSpec::Ellipsoid { .. } | DomainSpec::Ball { .. } | DomainSpec::Polydisk { .. } => {}
        _ => {
            return Err(Error::Unsupported(
                "monomial series needs an ellipsoid, ball or polydisk".into(),
            ))
        }
    }
    if !contains(domain, w)? {
        return Err(Error::OutsideDomain("base point is not inside the domain".into()));
    }
    let n = domain.dimension();
    let active: Vec<usize> = (0..n).filter(|&j| w[j].norm() > T::zero()).collect();
    if active.is_empty() {
        return Ok(KernelValue::exact(volume(domain)?.recip(), KernelMethod::MonomialSeries));
    }
    let ln_w2: Vec<T> = active.iter().map(|&j| T::lit(2.0) * w[j].norm().ln()).collect();

    let mut alpha = vec![0u32; n];
    let mut sum = T::zero();
    let mut prev_block = T::zero();
    let mut terms = 0usize;
    let mut prefix = Vec::with_capacity(active.len());
    for degree in 0..=MAX_DEGREE {
        let mut block = T::zero();
        let mut failure = None;
        for_each_composition(degree as u32, active.len(), &mut prefix, &mut |parts| {
            for (slot, &j) in parts.iter().zip(&active) {
                alpha[j] = *slot;
            }
            let mut ln_term = T::zero();
            for (&a, &l) in parts.iter().zip(&ln_w2) {
                if a > 0 {
                    ln_term = ln_term + T::from_count(a as usize) * l;
                }
            }
            match ln_monomial_norm(domain, &alpha) {
                Ok(ln_norm) => block = block + (ln_term - ln_norm).exp(),
                Err(e) => failure = Some(e),
            }
            terms += 1;
        });
        if let Some(e) = failure {
            return Err(e);
        }
        sum = sum + block;
        if degree >= 2 && block < prev_block {
            let ratio = block / prev_block;
            let tail = block * ratio / (T::one() - ratio);
            if tail <= tol.bound(sum) {
                return Ok(KernelValue {
                    value: sum,
                    method: KernelMethod::MonomialSeries,
                    error_bound: tail,
                });
            }
        }
        if terms > MAX_TERMS {
            break;
        }
        prev_block = block;
    }
    Err(Error::Convergence {
        what: "kernel_reinhardt",
        iterations: terms,
        estimate: sum.to_f64_lossy(),
    })
}

fn check_annulus<T: Real>(r: T, w: Complex<T>) -> Result<()> {
    DomainSpec::annulus(r)?;
    let m = w.norm();
    if !(m > r && m < T::one()) {
        return Err(Error::OutsideDomain(format!(
            "point {w} is not in the annulus {} < |z| < 1",
            r.to_f64_lossy()
        )));
    }
    Ok(())
}

// sum_{k > n} k x^k
fn weighted_geometric_tail<T: Real>(x: T, n: usize) -> T {
    let nn = T::from_count(n);
    let one = T::one();
    x.powf(nn + one) * ((nn + one) - nn * x) / ((one - x) * (one - x))
}

/// Annulus kernel with `truncation` terms on each side, and a rigorous bound
/// on the dropped tails.
///
/// `K(w) = (1/(pi |w|^2)) (1/(-2 log r) + sum_{j != 0} j |w|^(2j) / (1 - r^(2j)))`;
/// the `1/(-2 log r)` term is the `j -> 0` limit of the summand.
pub fn kernel_annulus_truncated<T: Real>(r: T, w: Complex<T>, truncation: usize) -> Result<KernelValue<T>> {
    check_annulus(r, w)?;
    let one = T::one();
    let x = w.norm_sqr();
    let y = r * r / x;
    let r2 = r * r;
    let mut sum = -(T::lit(2.0) * r.ln()).recip();
    for k in 1..=truncation {
        let kk = T::from_count(k);
        // 1 - r^(2k)
        let denom = -(T::lit(2.0) * kk * r.ln()).exp_m1();
        sum = sum + kk * (x.powf(kk) + y.powf(kk)) / denom;
    }
    let damp = (one - r2.powf(T::from_count(truncation + 1))).recip();
    let tail = damp * (weighted_geometric_tail(x, truncation) + weighted_geometric_tail(y, truncation));
    let scale = (T::PI() * x).recip();
    Ok(KernelValue {
        value: scale * sum,
        method: KernelMethod::AnnulusSeries,
        error_bound: scale * tail,
    })
}

/// Annulus kernel truncated at the first order whose tail bound is below
/// `tol.bound(K)`.
pub fn kernel_annulus<T: Real>(r: T, w: Complex<T>, tol: &Tolerance<T>) -> Result<KernelValue<T>> {
    tol.validate()?;
    check_annulus(r, w)?;
    let mut n = 8;
    loop {
        let k = kernel_annulus_truncated(r, w, n)?;
        if k.error_bound <= tol.bound(k.value) {
            return Ok(k);
        }
        n *= 2;
        if n > MAX_DEGREE {
            return Err(Error::Convergence {
                what: "kernel_annulus",
                iterations: n,
                estimate: k.value.to_f64_lossy(),
            });
        }
    }
}

fn check_b<T: Real>(b: T) -> Result<()> {
    if !(b > T::zero() && b < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "b must lie in (0, 1), got {}",
            b.to_f64_lossy()
        )));
    }
    Ok(())
}

// (1 - b)^-s - (1 + b)^-s without cancellation for small b
fn power_gap<T: Real>(s: T, b: T) -> T {
    let log_ratio = b.ln_1p() - (-b).ln_1p();
    (-s * b.ln_1p()).exp() * (s * log_ratio).exp_m1()
}

/// Kernel of `{ |z_1| + |z_2|^(2/p) < 1 }` at `(b, 0)`:
/// `(p+1)/(4 pi^2 b) ((1-b)^(-p-2) - (1+b)^(-p-2))`.
pub fn kernel_ellipsoid_closed<T: Real>(p: T, b: T) -> Result<KernelValue<T>> {
    check_b(b)?;
    if !(p > T::zero()) {
        return Err(Error::InvalidParameter("p must be positive".into()));
    }
    let value = (p + T::one()) / (T::lit(4.0) * T::PI() * T::PI() * b) * power_gap(p + T::lit(2.0), b);
    Ok(KernelValue::exact(value, KernelMethod::ClosedForm))
}

/// `lambda(E(1/2, 1/p)) / lambda(Omega) * K_{E(1/2,1/p)}((b, 0))` with
/// `p = (n-1)/m`, the two-dimensional reduction of the family kernel.
pub fn deflation_identity<T: Real>(params: &EllipsoidFamilyParams<T>) -> Result<T> {
    let p = params.a() - T::lit(2.0);
    let one = T::one();
    let small = T::lit(2.0) * T::PI() * T::PI() / ((p + one) * (p + T::lit(2.0)));
    Ok(small / params.domain_volume() * kernel_ellipsoid_closed(p, params.b)?.value)
}

/// Kernel of `{ |z_1| + |z_2|^(2m) + ... + |z_n|^(2m) < 1 }` at
/// `(b, 0, ..., 0)`: `(a-1)/(4 pi omega b) ((1-b)^-a - (1+b)^-a)`.
///
/// The two-dimensional reduction is evaluated as well and must agree.
pub fn kernel_deflated<T: Real>(params: &EllipsoidFamilyParams<T>) -> Result<KernelValue<T>> {
    check_b(params.b)?;
    let a = params.a();
    let value = (a - T::one()) / (T::lit(4.0) * T::PI() * params.omega() * params.b) * power_gap(a, params.b);
    let reduced = deflation_identity(params)?;
    if ((value - reduced) / value).abs() > T::lit(1e-10).max(T::epsilon() * T::lit(1e3)) {
        return Err(Error::Unresolved(format!(
            "deflation paths disagree: {} vs {}",
            value.to_f64_lossy(),
            reduced.to_f64_lossy()
        )));
    }
    Ok(KernelValue::exact(value, KernelMethod::Deflation))
}

/// Kernel of `{ |z_1|^(2m) + |z_2|^2 < 1 }` at `(b, 0)`, with `x = b^2`:
/// `((1+x)/(1-x)^3 + m/(1-x)^2) / (pi^2 m)`.
pub fn kernel_power_family<T: Real>(m: T, b: T) -> Result<KernelValue<T>> {
    if !(m > T::zero()) {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    if !(b >= T::zero() && b < T::one()) {
        return Err(Error::InvalidParameter("b must lie in [0, 1)".into()));
    }
    let one = T::one();
    let x = b * b;
    let d = one - x;
    let value = ((one + x) / (d * d * d) + m / (d * d)) / (T::PI() * T::PI() * m);
    Ok(KernelValue::exact(value, KernelMethod::ClosedForm))
}

/// `K(0) = 2/pi^2` on the symmetrized bidisk.
pub fn kernel_g2_center<T: Real>() -> KernelValue<T> {
    KernelValue::exact(T::lit(2.0) / (T::PI() * T::PI()), KernelMethod::Tabulated)
}
