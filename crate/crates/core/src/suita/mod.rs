//! The invariant `F(w) = (K(w) lambda(I(w)))^(1/n)` and its extremal
//! behaviour on ellipsoid families.
//!
//! `F >= 1` always (multidimensional Suita). Upper bounds: 16 on
//! C-convex domains, 4 on convex domains, `16/pi^2` at a center of symmetry
//! of a convex domain.

mod checks;
mod experiment;

pub use checks::{check_lower_bound_est1, check_reverse_suita, LowerBoundMargin, ReverseSuita};
pub use experiment::{
    figure_scan, lower_bound_experiment, monotonicity_experiment, ExperimentKind, ExperimentMetadata, ExperimentReport, ReportSample,
    ScanFamily, Verdict, CONVEXITY_LABEL, LIMIT_REL_TOL, SIGMA_MULTIPLIER,
};

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bergman::{
    kernel_annulus, kernel_deflated, kernel_g2_center, kernel_power_family, kernel_reinhardt, KernelMethod, KernelValue,
};
use crate::domains::{volume, DomainSpec, EllipsoidFamilyParams};
use crate::error::{Error, Result};
use crate::green1d::{robin_capacity, solve_green_annulus};
use crate::indicatrix::{azukawa_g2_center, indicatrix_volume_closed, indicatrix_volume_numeric, ENVELOPE_GRID};
use crate::numerics::Tolerance;
use crate::scalar::Real;

/// Which upper bound on `F` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// C-convex domains: `F <= 16`.
    CConvex,
    /// Convex domains: `F <= 4`.
    Convex,
    /// Center of symmetry of a convex domain: `F <= 16/pi^2`.
    SymmetricCenter,
    None,
}

impl Classification {
    pub fn bound<T: Real>(self) -> Option<T> {
        match self {
            Classification::CConvex => Some(T::lit(16.0)),
            Classification::Convex => Some(T::lit(4.0)),
            Classification::SymmetricCenter => Some(T::lit(16.0) / (T::PI() * T::PI())),
            Classification::None => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuitaRatio<T = f64> {
    pub kernel: KernelValue<T>,
    pub indicatrix_volume: T,
    pub dimension: usize,
    /// `K lambda(I)`.
    pub product: T,
    /// `product^(1/n)`.
    pub f: T,
    pub classification: Classification,
}

impl<T: Real> SuitaRatio<T> {
    fn new(kernel: KernelValue<T>, indicatrix_volume: T, dimension: usize, classification: Classification) -> Self {
        let product = kernel.value * indicatrix_volume;
        Self::with_product(kernel, indicatrix_volume, dimension, product, classification)
    }

    fn with_product(
        kernel: KernelValue<T>,
        indicatrix_volume: T,
        dimension: usize,
        product: T,
        classification: Classification,
    ) -> Self {
        SuitaRatio {
            kernel,
            indicatrix_volume,
            dimension,
            product,
            f: product.powf(T::from_count(dimension).recip()),
            classification,
        }
    }

    /// Whether `1 - tol <= F <= bound + tol`.
    pub fn within_bounds(&self, tol: T) -> bool {
        let upper = self.classification.bound::<T>().is_none_or(|c| self.f <= c + tol);
        self.f >= T::one() - tol && upper
    }
}

// (1+b)^a - (1-b)^a - 2ab, by its odd binomial series for small b
fn odd_binomial_remainder<T: Real>(a: T, b: T) -> T {
    if b > T::lit(0.5) {
        return (T::one() + b).powf(a) - (T::one() - b).powf(a) - T::lit(2.0) * a * b;
    }
    let mut coeff = a; // C(a, 1)
    let mut power = b;
    let mut sum = T::zero();
    for k in 2..400 {
        coeff = coeff * (a - T::from_count(k - 1)) / T::from_count(k);
        power = power * b;
        if k % 2 == 1 {
            let term = T::lit(2.0) * coeff * power;
            sum = sum + term;
            if term.abs() <= T::epsilon() * sum.abs() {
                break;
            }
        }
    }
    sum
}

/// `K lambda(I^K)` for the family at `(b, 0, ..., 0)`:
/// `1 + (1-b)^a ((1+b)^a - (1-b)^a - 2ab) / (2ab (1+b)^a)`.
///
/// Checked against the product of the separate kernel and volume closed
/// forms to `1e-12`.
pub fn product_closed_form<T: Real>(params: &EllipsoidFamilyParams<T>) -> Result<T> {
    let (a, b) = (params.a(), params.b);
    let one = T::one();
    let ratio = ((one - b) / (one + b)).powf(a);
    let value = one + ratio * odd_binomial_remainder(a, b) / (T::lit(2.0) * a * b);
    let factored = kernel_deflated(params)?.value * indicatrix_volume_closed(params);
    if ((value - factored) / value).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) {
        return Err(Error::Unresolved(format!(
            "closed-form product {} disagrees with kernel x volume {}",
            value.to_f64_lossy(),
            factored.to_f64_lossy()
        )));
    }
    Ok(value)
}

fn is_origin<T: Real>(w: &[Complex<T>]) -> bool {
    w.iter().all(|z| z.norm() == T::zero())
}

/// Recognises `{ |z_1| + |z_2|^(2m) + ... < 1 }` at `(b, 0, ..., 0)`.
fn as_ell1_family<T: Real>(domain: &DomainSpec<T>, w: &[Complex<T>]) -> Option<EllipsoidFamilyParams<T>> {
    let DomainSpec::Ellipsoid { p, radii } = domain else { return None };
    let n = p.len();
    if n < 2 || radii.iter().any(|&r| r != T::one()) || p[0] != T::lit(0.5) {
        return None;
    }
    if p[1..].iter().any(|&q| q != p[1]) || w[1..].iter().any(|z| z.norm() != T::zero()) {
        return None;
    }
    if w[0].im != T::zero() || !(w[0].re > T::zero()) {
        return None;
    }
    EllipsoidFamilyParams::new(p[1], n, w[0].re).ok()
}

/// Recognises `{ |z_1|^(2m) + |z_2|^2 < 1 }` at `(b, 0)`.
fn as_power_family<T: Real>(domain: &DomainSpec<T>, w: &[Complex<T>]) -> Option<(T, T)> {
    let DomainSpec::Ellipsoid { p, radii } = domain else { return None };
    if p.len() != 2 || radii.iter().any(|&r| r != T::one()) || p[1] != T::one() || !(p[0] >= T::lit(0.5)) {
        return None;
    }
    if w[1].norm() != T::zero() || w[0].im != T::zero() || !(w[0].re > T::zero() && w[0].re < T::one()) {
        return None;
    }
    Some((p[0], w[0].re))
}

/// `F` at an axis point of the family `{ |z_1| + sum |z_j|^(2m) < 1 }`.
pub fn suita_f_ell1<T: Real>(params: &EllipsoidFamilyParams<T>) -> Result<SuitaRatio<T>> {
    let kernel = kernel_deflated(params)?;
    let vol = indicatrix_volume_closed(params);
    let product = product_closed_form(params)?;
    Ok(SuitaRatio::with_product(kernel, vol, params.n, product, Classification::Convex))
}

/// `F` at `(b, 0)` in `{ |z_1|^(2m) + |z_2|^2 < 1 }`, with the indicatrix
/// volume from the extremal-disc envelope.
pub fn suita_f_power<T: Real>(m: T, b: T, grid: usize) -> Result<SuitaRatio<T>> {
    let kernel = kernel_power_family(m, b)?;
    let vol = indicatrix_volume_numeric(&[m, T::one()], b, grid)?.value;
    Ok(SuitaRatio::new(kernel, vol, 2, Classification::Convex))
}

/// `F` for the supported `(domain, w)` combinations: balanced domains at the
/// origin, balls and polydisks anywhere, the symmetrized bidisk at the
/// origin, the two ellipsoid families at axis points, and planar disks and
/// annuli.
pub fn suita_f<T: Real>(domain: &DomainSpec<T>, w: &[Complex<T>], tol: &Tolerance<T>) -> Result<SuitaRatio<T>> {
    domain.validate()?;
    let n = domain.dimension();
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.len() });
    }
    if !crate::domains::contains(domain, w)? {
        return Err(Error::OutsideDomain("base point is not inside the domain".into()));
    }
    let one = T::one();
    let pi = T::PI();
    match domain {
        DomainSpec::SymmetrizedBidisk if is_origin(w) => {
            let vol = azukawa_g2_center::<T>().volume()?;
            Ok(SuitaRatio::new(kernel_g2_center(), vol, 2, Classification::CConvex))
        }
        DomainSpec::SymmetrizedBidisk => Err(Error::Unsupported(
            "the symmetrized bidisk is only handled at the origin".into(),
        )),
        DomainSpec::Annulus { r } => {
            let green = solve_green_annulus(*r, w[0], tol)?;
            let cap = robin_capacity(&green);
            let kernel = kernel_annulus(*r, w[0], tol)?;
            Ok(SuitaRatio::new(kernel, pi / (cap * cap), 1, Classification::None))
        }
        _ if is_origin(w) && domain.is_balanced() => {
            let vol = volume(domain)?;
            let kernel = KernelValue {
                value: vol.recip(),
                method: KernelMethod::ClosedForm,
                error_bound: T::zero(),
            };
            let class = if domain.is_convex() {
                Classification::SymmetricCenter
            } else {
                Classification::None
            };
            // the indicatrix is the domain itself, so the product is exactly one
            Ok(SuitaRatio::with_product(kernel, vol, n, one, class))
        }
        DomainSpec::Ball { n } => {
            // homogeneous: K and the indicatrix volume scale by reciprocal powers
            let s = one - w.iter().map(|z| z.norm_sqr()).sum::<T>();
            let vol = volume(domain)? * s.powi(*n as i32 + 1);
            let kernel = KernelValue {
                value: vol.recip(),
                method: KernelMethod::ClosedForm,
                error_bound: T::zero(),
            };
            Ok(SuitaRatio::with_product(kernel, vol, *n, one, Classification::Convex))
        }
        DomainSpec::Polydisk { n } => {
            let vol = w.iter().map(|z| pi * (one - z.norm_sqr()).powi(2)).fold(one, |a, b| a * b);
            let kernel = KernelValue {
                value: vol.recip(),
                method: KernelMethod::ClosedForm,
                error_bound: T::zero(),
            };
            Ok(SuitaRatio::with_product(kernel, vol, *n, one, Classification::Convex))
        }
        DomainSpec::Ellipsoid { .. } => {
            if let Some(params) = as_ell1_family(domain, w) {
                return suita_f_ell1(&params);
            }
            if let Some((m, b)) = as_power_family(domain, w) {
                return suita_f_power(m, b, ENVELOPE_GRID);
            }
            let _ = kernel_reinhardt(domain, w, tol)?;
            Err(Error::Unsupported(
                "indicatrix volume is only available at the center or on the two axis families".into(),
            ))
        }
    }
}

/// One-parameter families scanned over `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family<T = f64> {
    /// `{ |z_1| + |z_2|^(2m) + ... + |z_n|^(2m) < 1 }`, closed form.
    Ell1 { m: T, n: usize },
    /// `{ |z_1|^(2m) + |z_2|^2 < 1 }`, numeric indicatrix volume.
    Power { m: T },
}

impl<T: Real> Family<T> {
    pub fn f(&self, b: T) -> Result<T> {
        match *self {
            Family::Ell1 { m, n } => {
                let params = EllipsoidFamilyParams::new(m, n, b)?;
                Ok(product_closed_form(&params)?.powf(T::from_count(n).recip()))
            }
            Family::Power { m } => Ok(suita_f_power(m, b, ENVELOPE_GRID)?.f),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Family::Ell1 { m, n } => format!("ell1 m={} n={}", m.to_f64_lossy(), n),
            Family::Power { m } => format!("power m={}", m.to_f64_lossy()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Ell1 { m, n } => EllipsoidFamilyParams::new(m, n, T::lit(0.5)).map(|_| ()),
            Family::Power { m } => {
                if m >= T::lit(0.5) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("power family needs m >= 1/2".into()))
                }
            }
        }
    }
}

/// Lower end of the search interval for `b`; the upper end is `1 - B_MARGIN`.
pub const B_MARGIN: f64 = 1e-4;
/// Points of the coarse scan preceding golden-section refinement.
pub const COARSE_SCAN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maximum<T = f64> {
    pub b: T,
    pub f: T,
    /// Final bracket containing the maximiser.
    pub bracket: (T, T),
    /// True when the coarse scan found the objective flat to within the
    /// tolerance, in which case `bracket` is the whole search interval.
    pub flat: bool,
    pub evaluations: usize,
}

/// Maximises `b -> F` on `(B_MARGIN, 1 - B_MARGIN)`: a coarse scan uniform in
/// `logit(b)` (peaks crowd towards `b = 1` for large exponents), then golden
/// section on the bracket around the best scan point until its width is
/// below `tol.abs_tol`.
pub fn maximize_f<T: Real>(family: &Family<T>, tol: &Tolerance<T>) -> Result<Maximum<T>> {
    family.validate()?;
    tol.validate()?;
    let lo = T::lit(B_MARGIN);
    let hi = T::one() - lo;
    let logit = |b: T| (b / (T::one() - b)).ln();
    let expit = |x: T| (T::one() + (-x).exp()).recip();
    let (x0, x1) = (logit(lo), logit(hi));
    let grid: Vec<T> = (0..COARSE_SCAN)
        .map(|i| expit(x0 + (x1 - x0) * T::from_count(i) / T::from_count(COARSE_SCAN - 1)))
        .collect();
    let values: Vec<T> = grid.par_iter().map(|&b| family.f(b)).collect::<Result<_>>()?;
    let mut evaluations = grid.len();
    let (best, &fbest) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite F"))
        .expect("non-empty scan");
    let fmin = values.iter().copied().fold(T::infinity(), T::min);
    if fbest - fmin <= tol.abs_tol {
        return Ok(Maximum {
            b: grid[best],
            f: fbest,
            bracket: (lo, hi),
            flat: true,
            evaluations,
        });
    }
    let mut a = grid[best.saturating_sub(1)];
    let mut d = grid[(best + 1).min(grid.len() - 1)];
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut b = d - inv_phi * (d - a);
    let mut c = a + inv_phi * (d - a);
    let mut fb = family.f(b)?;
    let mut fc = family.f(c)?;
    evaluations += 2;
    let width_tol = tol.abs_tol.max(T::epsilon() * T::lit(16.0));
    let mut iterations = 0;
    while d - a > width_tol {
        iterations += 1;
        if iterations > tol.max_iter {
            return Err(Error::Convergence {
                what: "maximize_f",
                iterations,
                estimate: fb.max(fc).to_f64_lossy(),
            });
        }
        if fb >= fc {
            d = c;
            c = b;
            fc = fb;
            b = d - inv_phi * (d - a);
            fb = family.f(b)?;
        } else {
            a = b;
            b = c;
            fb = fc;
            c = a + inv_phi * (d - a);
            fc = family.f(c)?;
        }
        evaluations += 1;
    }
    let (bstar, fstar) = if fb >= fc { (b, fb) } else { (c, fc) };
    let (bstar, fstar) = if fbest > fstar { (grid[best], fbest) } else { (bstar, fstar) };
    Ok(Maximum {
        b: bstar,
        f: fstar,
        bracket: (a, d),
        flat: false,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn tol() -> Tolerance<f64> {
        Tolerance::default()
    }

    #[test]
    fn product_matches_factors_on_grid() {
        for m in [0.5, 1.0, 2.0] {
            for n in [2, 3, 4] {
                for b in [0.1, 0.5, 0.9] {
                    let params = EllipsoidFamilyParams::<f64>::new(m, n, b).unwrap();
                    let prod = product_closed_form(&params).unwrap();
                    let factored = kernel_deflated(&params).unwrap().value * indicatrix_volume_closed(&params);
                    assert!(((prod - factored) / prod).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_tends_to_one() {
        let small = EllipsoidFamilyParams::<f64>::new(0.5, 3, 1e-8).unwrap();
        assert!((product_closed_form(&small).unwrap() - 1.0).abs() < 1e-14);
        let near_one = EllipsoidFamilyParams::<f64>::new(0.5, 3, 1.0 - 1e-6).unwrap();
        assert!((product_closed_form(&near_one).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn maximum_for_half_three() {
        let t = Tolerance::new(1e-10, 1e-10, 200).unwrap();
        let max = maximize_f(&Family::<f64>::Ell1 { m: 0.5, n: 3 }, &t).unwrap();
        assert!((max.b - 0.1635017491).abs() < 1e-7, "b* = {}", max.b);
        assert!((max.f - 1.0041178661).abs() < 1e-9, "F* = {}", max.f);
        assert!(!max.flat);
    }

    #[test]
    fn three_dimensions_give_the_largest_maximum() {
        let t = Tolerance::new(1e-9, 1e-10, 200).unwrap();
        let best = maximize_f(&Family::<f64>::Ell1 { m: 0.5, n: 3 }, &t).unwrap().f;
        for n in [2, 4, 5, 6] {
            let other = maximize_f(&Family::<f64>::Ell1 { m: 0.5, n }, &t).unwrap().f;
            assert!(other < best, "n = {n}: {other}");
        }
        let two = maximize_f(&Family::<f64>::Ell1 { m: 0.5, n: 2 }, &t).unwrap();
        assert!((two.f - 1.0040571).abs() < 1e-6);
    }

    #[test]
    fn balanced_centers_give_one() {
        for d in [
            DomainSpec::Ball { n: 3 },
            DomainSpec::Polydisk { n: 2 },
            DomainSpec::ellipsoid(vec![0.5, 2.0]).unwrap(),
            DomainSpec::disk(),
        ] {
            let zero = vec![c(0.0); d.dimension()];
            let s = suita_f(&d, &zero, &tol()).unwrap();
            assert_eq!(s.f, 1.0);
            assert_eq!(s.classification, Classification::SymmetricCenter);
        }
    }

    #[test]
    fn homogeneous_domains_off_center() {
        let s = suita_f(&DomainSpec::Ball { n: 2 }, &[c(0.3), Complex::new(0.1, 0.5)], &tol()).unwrap();
        assert_eq!(s.f, 1.0);
        let s = suita_f(&DomainSpec::Polydisk { n: 2 }, &[c(0.3), c(-0.8)], &tol()).unwrap();
        assert_eq!(s.f, 1.0);
    }

    #[test]
    fn symmetrized_bidisk() {
        let s = suita_f(&DomainSpec::SymmetrizedBidisk, &[c(0.0), c(0.0)], &tol()).unwrap();
        assert!((s.f - 2.0 / 3f64.sqrt()).abs() < 1e-10);
        assert!(s.within_bounds(1e-12));
    }

    #[test]
    fn family_point() {
        let params = EllipsoidFamilyParams::<f64>::new(1.0, 2, 0.5).unwrap();
        let d = params.domain();
        let s = suita_f(&d, &params.base_point(), &tol()).unwrap();
        assert!((s.f - product_closed_form(&params).unwrap().sqrt()).abs() < 1e-15);
        assert_eq!(s.classification, Classification::Convex);
    }

    #[test]
    fn power_family_half_is_ell1() {
        for b in [0.2, 0.5, 0.8] {
            let p = Family::<f64>::Power { m: 0.5 }.f(b).unwrap();
            let e = Family::<f64>::Ell1 { m: 1.0, n: 2 }.f(b).unwrap();
            assert!((p - e).abs() < 1e-4, "b = {b}: {p} vs {e}");
        }
    }

    #[test]
    fn annulus_ratio_is_unbounded() {
        let r: f64 = 1e-4;
        let s = suita_f(&DomainSpec::annulus(r).unwrap(), &[c(r.sqrt())], &tol()).unwrap();
        assert!(s.f > 1.0);
        assert_eq!(s.classification, Classification::None);
    }

    #[test]
    fn scaling_invariance_at_center() {
        let d = DomainSpec::ellipsoid(vec![0.5, 2.0]).unwrap();
        let big = DomainSpec::ellipsoid_with_radii(vec![0.5, 2.0], vec![3.0, 3.0]).unwrap();
        let z = [c(0.0), c(0.0)];
        assert_eq!(suita_f(&d, &z, &tol()).unwrap().f, suita_f(&big, &z, &tol()).unwrap().f);
    }

    #[test]
    fn unsupported_combination() {
        let d = DomainSpec::ellipsoid(vec![1.0, 2.0, 3.0]).unwrap();
        let err = suita_f(&d, &[c(0.1), c(0.1), c(0.0)], &tol()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn bounds_table() {
        assert_eq!(Classification::Convex.bound::<f64>(), Some(4.0));
        assert!((Classification::SymmetricCenter.bound::<f64>().unwrap() - 16.0 / (PI * PI)).abs() < 1e-15);
        assert_eq!(Classification::None.bound::<f64>(), None);
    }
}
