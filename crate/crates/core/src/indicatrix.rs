//! Azukawa and Kobayashi indicatrices and their volumes.
//!
//! Every indicatrix handled here is Reinhardt in the first coordinate and
//! has ellipsoidal slices:
//!
//! ```text
//! I = { X : sum_{j >= 2} |X_j|^(2 q_j) < gamma(|X_1|) }
//! ```
//!
//! so `vol(I) = V_q * integral 2 pi r gamma(r)^(sum 1/q_j) dr` where `V_q` is
//! the volume of the unit slice ellipsoid. For convex ellipsoids at an axis
//! point the boundary is traced by extremal discs, which yield two arcs
//! `u -> (|X_1|, S)` with `S = sum |X_j|^(2 q_j)`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{volume, DomainSpec, EllipsoidFamilyParams};
use crate::error::{Error, Result};
use crate::numerics::{integrate_1d_with_knots, Tolerance};
use crate::scalar::Real;

/// Default rho-grid of the envelope construction.
pub const ENVELOPE_GRID: usize = 2048;
/// Envelope refinement stops once the volume moves less than this.
pub const ENVELOPE_REL_CHANGE: f64 = 1e-5;
const MAX_ENVELOPE_GRID: usize = 1 << 20;
const ARC_OVERSAMPLING: usize = 8;

/// Whether the first coordinate of the extremal disc vanishes somewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `1 in A`: admissible for `u = |alpha_1|` in `[b, 1]`.
    InA,
    /// `1 not in A`: admissible for `u` in `[0, 1]`.
    NotInA,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::InA => "1inA",
            Branch::NotInA => "1notinA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum RadialKind<T = f64> {
    /// `gamma(r) = 1 - r/2` on `[0, 2]`.
    SymmetrizedBidiskCenter,
    /// Kobayashi indicatrix of `{ |z_1| + sum |z_j|^(2q_j) < 1 }` at `(b, 0, ...)`.
    KobayashiHalf { b: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcPoint<T = f64> {
    pub u: T,
    pub rho: T,
    pub s: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[serde(bound(deserialize = "T: serde::de::DeserializeOwned + Default"))]
pub enum ProfileShape<T = f64> {
    /// The indicatrix coincides with the domain.
    BalancedIdentity { domain: DomainSpec<T> },
    RadialProfile { radial: RadialKind<T> },
    ParametricArcs {
        p1: T,
        b: T,
        in_a: Vec<ArcPoint<T>>,
        not_in_a: Vec<ArcPoint<T>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: serde::de::DeserializeOwned + Default"))]
pub struct IndicatrixProfile<T = f64> {
    pub dimension: usize,
    /// `q_2, ..., q_n`; empty for the balanced identity.
    pub slice_exponents: Vec<T>,
    pub shape: ProfileShape<T>,
}

impl<T: Real> RadialKind<T> {
    pub fn support(&self) -> T {
        match *self {
            RadialKind::SymmetrizedBidiskCenter => T::lit(2.0),
            RadialKind::KobayashiHalf { b } => T::one() - b * b,
        }
    }

    /// Interior points where `gamma` changes formula.
    pub fn knots(&self) -> Vec<T> {
        match *self {
            RadialKind::SymmetrizedBidiskCenter => Vec::new(),
            RadialKind::KobayashiHalf { b } => vec![T::lit(2.0) * b * (T::one() - b)],
        }
    }

    /// `gamma(r)`, zero beyond the support.
    pub fn gamma(&self, r: T) -> T {
        if r >= self.support() {
            return T::zero();
        }
        match *self {
            RadialKind::SymmetrizedBidiskCenter => T::one() - r / T::lit(2.0),
            RadialKind::KobayashiHalf { b } => {
                let one = T::one();
                if r <= T::lit(2.0) * b * (one - b) {
                    one - b - r * r / (T::lit(4.0) * b * (one - b))
                } else {
                    one - b * b - r
                }
            }
        }
    }

    pub fn gamma_derivative(&self, r: T) -> T {
        match *self {
            RadialKind::SymmetrizedBidiskCenter => -T::lit(0.5),
            RadialKind::KobayashiHalf { b } => {
                let one = T::one();
                if r <= T::lit(2.0) * b * (one - b) {
                    -r / (T::lit(2.0) * b * (one - b))
                } else {
                    -one
                }
            }
        }
    }
}

impl<T: Real> IndicatrixProfile<T> {
    /// Volume of the unit slice `{ sum_{j>=2} |X_j|^(2 q_j) < 1 }`.
    fn slice_volume(&self) -> Result<T> {
        volume(&DomainSpec::ellipsoid(self.slice_exponents.clone())?)
    }

    fn slice_power(&self) -> T {
        self.slice_exponents.iter().map(|q| q.recip()).sum()
    }

    pub fn volume(&self) -> Result<T> {
        match &self.shape {
            ProfileShape::BalancedIdentity { domain } => volume(domain),
            ProfileShape::RadialProfile { radial } => {
                let power = self.slice_power();
                let two_pi = T::lit(2.0) * T::PI();
                let q = integrate_1d_with_knots(
                    |r| two_pi * r * radial.gamma(r).max(T::zero()).powf(power),
                    T::zero(),
                    radial.support(),
                    &radial.knots(),
                    &Tolerance::default(),
                )?;
                Ok(self.slice_volume()? * q.value)
            }
            ProfileShape::ParametricArcs { in_a, not_in_a, .. } => {
                if self.dimension != 2 {
                    return Err(Error::Unsupported("arc volumes are implemented for n = 2".into()));
                }
                let q2 = self.slice_exponents[0];
                envelope_volume(&[not_in_a.as_slice(), in_a.as_slice()], q2, ENVELOPE_GRID)
            }
        }
    }

    /// CSV of the boundary: `r,gamma` for radial profiles and
    /// `branch,u,rho,S` for arcs.
    pub fn to_csv(&self, samples: usize) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match &self.shape {
            ProfileShape::BalancedIdentity { .. } => {
                return Err(Error::Unsupported("the balanced identity has no radial profile".into()))
            }
            ProfileShape::RadialProfile { radial } => {
                w.write_record(["r", "gamma"])?;
                let top = radial.support();
                let n = samples.max(2);
                for i in 0..n {
                    let r = top * T::from_count(i) / T::from_count(n - 1);
                    w.write_record([
                        format!("{:e}", r.to_f64_lossy()),
                        format!("{:e}", radial.gamma(r).to_f64_lossy()),
                    ])?;
                }
            }
            ProfileShape::ParametricArcs { in_a, not_in_a, .. } => {
                w.write_record(["branch", "u", "rho", "S"])?;
                for (branch, arc) in [(Branch::NotInA, not_in_a), (Branch::InA, in_a)] {
                    for pt in arc {
                        w.write_record([
                            branch.label().to_string(),
                            format!("{:e}", pt.u.to_f64_lossy()),
                            format!("{:e}", pt.rho.to_f64_lossy()),
                            format!("{:e}", pt.s.to_f64_lossy()),
                        ])?;
                    }
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

/// The Azukawa indicatrix of a balanced pseudoconvex domain at its center
/// is the domain itself.
pub fn azukawa_balanced<T: Real>(domain: &DomainSpec<T>) -> Result<IndicatrixProfile<T>> {
    domain.validate()?;
    if !domain.is_balanced() {
        return Err(Error::Unsupported("Azukawa identity needs a balanced domain".into()));
    }
    Ok(IndicatrixProfile {
        dimension: domain.dimension(),
        slice_exponents: Vec::new(),
        shape: ProfileShape::BalancedIdentity { domain: domain.clone() },
    })
}

/// `{ X : |X_1| + 2|X_2| < 2 }`, the Azukawa indicatrix of the symmetrized
/// bidisk at the origin.
pub fn azukawa_g2_center<T: Real>() -> IndicatrixProfile<T> {
    IndicatrixProfile {
        dimension: 2,
        slice_exponents: vec![T::lit(0.5)],
        shape: ProfileShape::RadialProfile {
            radial: RadialKind::SymmetrizedBidiskCenter,
        },
    }
}

/// Kobayashi indicatrix of `{ |z_1| + sum_{j>=2} |z_j|^(2m) < 1 }` at
/// `(b, 0, ..., 0)`:
/// `gamma(r) = 1 - b - r^2 / (4b(1-b))` up to `r = 2b(1-b)`, then `1 - b^2 - r`.
pub fn kobayashi_profile_p1half<T: Real>(m: T, n: usize, b: T) -> Result<IndicatrixProfile<T>> {
    let params = EllipsoidFamilyParams::new(m, n, b)?;
    Ok(IndicatrixProfile {
        dimension: n,
        slice_exponents: vec![params.m; n - 1],
        shape: ProfileShape::RadialProfile {
            radial: RadialKind::KobayashiHalf { b },
        },
    })
}

/// `2 pi omega (1-b)^a ((1-b)^a + 2ab) / (a(a-1))`.
pub fn indicatrix_volume_closed<T: Real>(params: &EllipsoidFamilyParams<T>) -> T {
    let a = params.a();
    let one = T::one();
    let sb = (one - params.b).powf(a);
    T::lit(2.0) * T::PI() * params.omega() * sb * (sb + T::lit(2.0) * a * params.b) / (a * (a - one))
}

/// One extremal disc through `(b, 0, ..., 0)`, up to the phases of its
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicParams<T = f64> {
    pub p: Vec<T>,
    pub b: T,
    pub branch: Branch,
    /// `|alpha_1|`.
    pub u: T,
}

impl<T: Real> GeodesicParams<T> {
    pub fn new(p: Vec<T>, b: T, branch: Branch, u: T) -> Result<Self> {
        let g = GeodesicParams { p, b, branch, u };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.p.iter().any(|&q| !(q >= T::lit(0.5))) {
            return Err(Error::InvalidParameter("geodesics need exponents >= 1/2".into()));
        }
        if !(self.b > T::zero() && self.b < T::one()) {
            return Err(Error::InvalidParameter("b must lie in (0, 1)".into()));
        }
        let lo = match self.branch {
            Branch::InA => self.b,
            Branch::NotInA => T::zero(),
        };
        if !(self.u >= lo && self.u <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "|alpha_1| = {} outside the admissible range [{}, 1] of branch {}",
                self.u.to_f64_lossy(),
                lo.to_f64_lossy(),
                self.branch.label()
            )));
        }
        Ok(())
    }

    /// `|a_1|^(2 p_1)`.
    pub fn a1_weight(&self) -> T {
        let p1 = self.p[0];
        match self.branch {
            Branch::InA => (self.b / self.u).powf(T::lit(2.0) * p1),
            Branch::NotInA => self.b.powf(T::lit(2.0) * p1),
        }
    }
}

/// `(|X_1|, S)` for the extremal disc `g`, where `X = phi'(0)` and
/// `S = sum_{j>=2} |X_j|^(2 p_j)`.
pub fn geodesic_boundary_point<T: Real>(g: &GeodesicParams<T>) -> Result<(T, T)> {
    g.validate()?;
    let one = T::one();
    let (b, u, p1) = (g.b, g.u, g.p[0]);
    let bp = b.powf(T::lit(2.0) * p1);
    Ok(match g.branch {
        Branch::InA => {
            let v = (b / u).powf(T::lit(2.0) * p1);
            let u2 = u * u;
            let rho = (b / u) * (one + (p1.recip() - one) * u2 - u2 * v / p1).abs();
            (rho, ((one - v) * (one - u2 * v)).max(T::zero()))
        }
        Branch::NotInA => (u * b * (one - bp) / p1, (one - bp) * (one - bp * u * u)),
    })
}

/// `X_1 = phi_1'(0)` and `S` computed from the disc itself, with complex
/// `alpha_1`. Used to confirm that phases only rotate `X_1`.
pub fn geodesic_derivative<T: Real>(p1: T, b: T, branch: Branch, alpha1: Complex<T>) -> (Complex<T>, T) {
    let one = T::one();
    let u = alpha1.norm();
    match branch {
        Branch::InA => {
            let a1 = -Complex::new(b, T::zero()) / alpha1;
            let weight = a1.norm().powf(T::lit(2.0) * p1);
            let alpha0 = alpha1 * weight;
            let x1 = a1 * (Complex::new(one + (p1.recip() - one) * u * u, T::zero()) - alpha1 * alpha0.conj() / p1);
            (x1, one + weight * weight * u * u - weight * (one + u * u))
        }
        Branch::NotInA => {
            let weight = b.powf(T::lit(2.0) * p1);
            let alpha0 = alpha1 * weight;
            let x1 = (alpha0.conj() - alpha1.conj()) * b / p1;
            (x1, one + weight * weight * u * u - weight * (one + u * u))
        }
    }
}

// Sample parameters. On the 1-in-A branch `u = b e^s`; near `s = 0` the
// factor `(b/u)^(2 p_1)` collapses on the scale `1/p_1`, so a second grid
// resolves that layer.
fn arc_parameters<T: Real>(p1: T, b: T, branch: Branch, count: usize) -> Vec<T> {
    let count = count.max(2);
    let grid = |lo: T, hi: T| (0..count).map(move |i| lo + (hi - lo) * T::from_count(i) / T::from_count(count - 1));
    match branch {
        Branch::NotInA => grid(T::zero(), T::one()).collect(),
        Branch::InA => {
            let len = -b.ln();
            let layer = len.min(T::lit(20.0) / p1);
            let mut s: Vec<T> = grid(T::zero(), len).chain(grid(T::zero(), layer)).collect();
            s.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
            s.dedup();
            s.into_iter().map(|s| (b * s.exp()).min(T::one())).collect()
        }
    }
}

pub fn sample_arc<T: Real>(p: &[T], b: T, branch: Branch, count: usize) -> Result<Vec<ArcPoint<T>>> {
    let us = arc_parameters(p[0], b, branch, count);
    us.into_par_iter()
        .map(|u| {
            let g = GeodesicParams {
                p: p.to_vec(),
                b,
                branch,
                u,
            };
            geodesic_boundary_point(&g).map(|(rho, s)| ArcPoint { u, rho, s })
        })
        .collect()
}

/// Both boundary arcs of the Kobayashi indicatrix of `E(p)` at `(b, 0)`.
pub fn kobayashi_arcs<T: Real>(p: &[T], b: T, samples: usize) -> Result<IndicatrixProfile<T>> {
    if p.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: p.len(),
        });
    }
    GeodesicParams::new(p.to_vec(), b, Branch::NotInA, T::zero())?;
    Ok(IndicatrixProfile {
        dimension: 2,
        slice_exponents: vec![p[1]],
        shape: ProfileShape::ParametricArcs {
            p1: p[0],
            b,
            not_in_a: sample_arc(p, b, Branch::NotInA, samples)?,
            in_a: sample_arc(p, b, Branch::InA, samples)?,
        },
    })
}

// Monotone run of an arc in rho, stored with ascending rho.
struct Piece<T> {
    rho: Vec<T>,
    h2: Vec<T>,
}

fn monotone_pieces<T: Real>(arc: &[ArcPoint<T>], q2: T) -> Vec<Piece<T>> {
    let mut pieces = Vec::new();
    let mut start = 0;
    let mut dir = 0i8;
    let push = |pieces: &mut Vec<Piece<T>>, run: &[ArcPoint<T>]| {
        if run.len() < 2 {
            return;
        }
        let mut rho: Vec<T> = run.iter().map(|p| p.rho).collect();
        let mut h2: Vec<T> = run.iter().map(|p| p.s.max(T::zero()).powf(q2.recip())).collect();
        if rho[0] > rho[rho.len() - 1] {
            rho.reverse();
            h2.reverse();
        }
        pieces.push(Piece { rho, h2 });
    };
    for i in 1..arc.len() {
        let d = arc[i].rho - arc[i - 1].rho;
        let step = if d > T::zero() {
            1
        } else if d < T::zero() {
            -1
        } else {
            0
        };
        if step != 0 && dir != 0 && step != dir {
            push(&mut pieces, &arc[start..i]);
            start = i - 1;
        }
        if step != 0 {
            dir = step;
        }
    }
    push(&mut pieces, &arc[start..]);
    pieces
}

/// `2 pi^2 integral rho H(rho)^2 d rho` with `H^2 = max_arcs S^(1/q_2)` built
/// on a uniform rho-grid with `grid` panels.
fn envelope_volume<T: Real>(arcs: &[&[ArcPoint<T>]], q2: T, grid: usize) -> Result<T> {
    let pieces: Vec<Piece<T>> = arcs.iter().flat_map(|a| monotone_pieces(a, q2)).collect();
    let rho_max = pieces
        .iter()
        .map(|p| p.rho[p.rho.len() - 1])
        .fold(T::zero(), T::max);
    if !(rho_max > T::zero()) {
        return Err(Error::Unresolved("degenerate indicatrix arcs".into()));
    }
    let h = rho_max / T::from_count(grid);
    let slack = rho_max * T::lit(1e-12);
    let mut env = vec![T::neg_infinity(); grid + 1];
    for piece in &pieces {
        let (lo, hi) = (piece.rho[0] - slack, piece.rho[piece.rho.len() - 1] + slack);
        let first = (lo / h).ceil().max(T::zero()).to_usize().unwrap_or(0);
        let last = (hi / h).floor().to_usize().unwrap_or(0).min(grid);
        let mut k = 0;
        for (i, slot) in env.iter_mut().enumerate().take(last + 1).skip(first) {
            let x = T::from_count(i) * h;
            while k + 2 < piece.rho.len() && piece.rho[k + 1] < x {
                k += 1;
            }
            let (x0, x1) = (piece.rho[k], piece.rho[k + 1]);
            let val = if x1 > x0 {
                let t = ((x - x0) / (x1 - x0)).max(T::zero()).min(T::one());
                piece.h2[k] + (piece.h2[k + 1] - piece.h2[k]) * t
            } else {
                piece.h2[k].max(piece.h2[k + 1])
            };
            *slot = slot.max(val);
        }
    }
    if let Some(i) = env.iter().position(|v| *v == T::neg_infinity()) {
        return Err(Error::EnvelopeGap {
            rho: (T::from_count(i) * h).to_f64_lossy(),
        });
    }
    let mut sum = T::zero();
    for (i, &v) in env.iter().enumerate() {
        let w = if i == 0 || i == grid { T::lit(0.5) } else { T::one() };
        sum = sum + w * T::from_count(i) * h * v;
    }
    Ok(T::lit(2.0) * T::PI() * T::PI() * sum * h)
}

/// Envelope volume together with the grid it converged on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericVolume<T = f64> {
    pub value: T,
    pub grid: usize,
    pub relative_change: T,
}

/// Volume of the Kobayashi indicatrix of `E(p_1, p_2)` at `(b, 0)` from the
/// extremal-disc arcs. The grid starts at `grid` and doubles until the
/// volume moves less than [`ENVELOPE_REL_CHANGE`].
pub fn indicatrix_volume_numeric<T: Real>(p: &[T], b: T, grid: usize) -> Result<NumericVolume<T>> {
    if p.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: p.len(),
        });
    }
    if grid < 16 {
        return Err(Error::InvalidParameter("envelope grid must have at least 16 panels".into()));
    }
    GeodesicParams::new(p.to_vec(), b, Branch::NotInA, T::zero())?;
    let at = |grid: usize| -> Result<T> {
        let samples = grid * ARC_OVERSAMPLING;
        let not_in_a = sample_arc(p, b, Branch::NotInA, samples)?;
        let in_a = sample_arc(p, b, Branch::InA, samples)?;
        envelope_volume(&[not_in_a.as_slice(), in_a.as_slice()], p[1], grid)
    };
    let mut grid = grid;
    let mut prev = at(grid)?;
    loop {
        let next_grid = grid * 2;
        if next_grid > MAX_ENVELOPE_GRID {
            return Err(Error::Convergence {
                what: "indicatrix_volume_numeric",
                iterations: grid,
                estimate: prev.to_f64_lossy(),
            });
        }
        let next = at(next_grid)?;
        let change = ((next - prev) / next).abs();
        if change < T::lit(ENVELOPE_REL_CHANGE) {
            return Ok(NumericVolume {
                value: next,
                grid: next_grid,
                relative_change: change,
            });
        }
        prev = next;
        grid = next_grid;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn balanced_identity() {
        let ball = DomainSpec::<f64>::Ball { n: 2 };
        let prof = azukawa_balanced(&ball).unwrap();
        assert_eq!(prof.volume().unwrap(), volume(&ball).unwrap());
        let e = DomainSpec::ellipsoid(vec![0.5, 2.0]).unwrap();
        assert_eq!(azukawa_balanced(&e).unwrap().volume().unwrap(), volume(&e).unwrap());
        let big = DomainSpec::ellipsoid_with_radii(vec![0.5, 2.0], vec![2.0, 2.0]).unwrap();
        let ratio: f64 = azukawa_balanced(&big).unwrap().volume().unwrap() / volume(&e).unwrap();
        assert!((ratio - 16.0).abs() < 1e-12);
        assert!(azukawa_balanced(&DomainSpec::annulus(0.3).unwrap()).is_err());
    }

    #[test]
    fn g2_center_indicatrix() {
        let prof = azukawa_g2_center::<f64>();
        assert!(rel(prof.volume().unwrap(), 2.0 * PI * PI / 3.0) < 1e-12);
        let ProfileShape::RadialProfile { radial } = prof.shape else { panic!() };
        assert_eq!(radial.gamma(0.0), 1.0);
        assert_eq!(radial.gamma(2.0), 0.0);
    }

    #[test]
    fn kobayashi_profile_values() {
        let b: f64 = 0.3;
        let prof = kobayashi_profile_p1half(1.0, 2, b).unwrap();
        let ProfileShape::RadialProfile { radial } = prof.shape else { panic!() };
        let knot = 2.0 * b * (1.0 - b);
        assert_eq!(radial.gamma(0.0), 1.0 - b);
        let left = 1.0 - b - knot * knot / (4.0 * b * (1.0 - b));
        let right = 1.0 - b * b - knot;
        assert!((left - (1.0 - b).powi(2)).abs() < 1e-12);
        assert!((right - (1.0 - b).powi(2)).abs() < 1e-12);
        assert!((radial.gamma_derivative(knot) + 1.0).abs() < 1e-12);
        assert!((radial.gamma_derivative(knot * (1.0 + 1e-15)) + 1.0).abs() < 1e-12);
        assert_eq!(radial.gamma(1.0 - b * b), 0.0);
    }

    #[test]
    fn closed_volume_examples() {
        let p = EllipsoidFamilyParams::new(1.0, 2, 0.5).unwrap();
        let expected = PI * PI * 0.125 * 3.125 / 3.0;
        assert!(rel(indicatrix_volume_closed(&p), expected) < 1e-14);
        let prof = kobayashi_profile_p1half(1.0, 2, 0.5).unwrap();
        assert!(rel(prof.volume().unwrap(), expected) < 1e-10);

        let p = EllipsoidFamilyParams::new(0.5, 3, 0.3).unwrap();
        let quad = kobayashi_profile_p1half(0.5, 3, 0.3).unwrap().volume().unwrap();
        assert!(rel(indicatrix_volume_closed(&p), quad) < 1e-8);

        for (m, n) in [(0.5, 2), (1.0, 3), (2.0, 4)] {
            let p = EllipsoidFamilyParams::new(m, n, 1e-9).unwrap();
            assert!(rel(indicatrix_volume_closed(&p), p.domain_volume()) < 1e-6);
        }
    }

    #[test]
    fn closed_volume_decreases_in_b() {
        for (m, n) in [(0.5, 2), (0.5, 3), (1.0, 2), (2.0, 4)] {
            let mut prev = f64::INFINITY;
            for i in 1..100 {
                let v = indicatrix_volume_closed(&EllipsoidFamilyParams::new(m, n, i as f64 / 100.0).unwrap());
                assert!(v > 0.0 && v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn geodesic_examples_p1_half() {
        let b: f64 = 0.4;
        let p = vec![0.5, 1.0];
        let at = |branch, u| geodesic_boundary_point(&GeodesicParams::new(p.clone(), b, branch, u).unwrap()).unwrap();
        let (rho, s) = at(Branch::InA, b);
        assert!((rho - (1.0 - b * b)).abs() < 1e-14 && s.abs() < 1e-14);
        let (rho, s) = at(Branch::InA, 1.0);
        assert!((rho - 2.0 * b * (1.0 - b)).abs() < 1e-14);
        assert!((s - (1.0 - b).powi(2)).abs() < 1e-14);
        let (rho, s) = at(Branch::NotInA, 1.0);
        assert!((rho - 2.0 * b * (1.0 - b)).abs() < 1e-14);
        assert!((s - (1.0 - b).powi(2)).abs() < 1e-14);
        // printed 1-not-in-A form b(1-b)/p_1 agrees at p_1 = 1/2
        let (rho, _) = at(Branch::NotInA, 0.7);
        assert!((rho - 0.7 * b * (1.0 - b) / 0.5).abs() < 1e-15);
        assert!(GeodesicParams::new(p, b, Branch::InA, 0.5 * b).is_err());
    }

    #[test]
    fn arcs_trace_the_radial_profile() {
        let b: f64 = 0.35;
        let m = 2.0;
        let prof = kobayashi_profile_p1half(m, 2, b).unwrap();
        let ProfileShape::RadialProfile { radial } = prof.shape else { panic!() };
        for branch in [Branch::InA, Branch::NotInA] {
            for pt in sample_arc::<f64>(&[0.5, m], b, branch, 101).unwrap() {
                assert!((radial.gamma(pt.rho) - pt.s).abs() < 1e-12, "{branch:?} u = {}", pt.u);
            }
        }
    }

    #[test]
    fn arcs_abut_without_overlap_for_p1_half() {
        let b = 0.25;
        let knot = 2.0 * b * (1.0 - b);
        let not_in_a = sample_arc(&[0.5, 1.0], b, Branch::NotInA, 257).unwrap();
        let in_a = sample_arc(&[0.5, 1.0], b, Branch::InA, 257).unwrap();
        let span = |arc: &[ArcPoint<f64>]| {
            arc.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.rho), hi.max(p.rho)))
        };
        let (lo, hi) = span(&not_in_a);
        assert!(lo == 0.0 && (hi - knot).abs() < 1e-15);
        let (lo, hi) = span(&in_a);
        assert!((lo - knot).abs() < 1e-15 && (hi - (1.0 - b * b)).abs() < 1e-15);
    }

    #[test]
    fn phase_sweep_leaves_boundary_point_fixed() {
        for &(p1, b) in &[(0.5, 0.3), (1.0, 0.6), (3.0, 0.45)] {
            for branch in [Branch::InA, Branch::NotInA] {
                let u = 0.8;
                let (rho, s) = geodesic_boundary_point(&GeodesicParams::new(vec![p1, 1.0], b, branch, u).unwrap()).unwrap();
                for k in 0..16 {
                    let alpha = Complex::from_polar(u, 0.4 * k as f64);
                    let (x1, s2) = geodesic_derivative(p1, b, branch, alpha);
                    assert!((x1.norm() - rho).abs() < 1e-14, "{branch:?} p1 = {p1}");
                    assert!((s2 - s).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn numeric_matches_closed_form() {
        for m in [0.5, 1.0, 2.0] {
            for b in [0.2, 0.5] {
                let num = indicatrix_volume_numeric(&[0.5, m], b, ENVELOPE_GRID).unwrap();
                let closed = indicatrix_volume_closed(&EllipsoidFamilyParams::new(m, 2, b).unwrap());
                assert!(rel(num.value, closed) < 1e-4, "m = {m}, b = {b}: {} vs {closed}", num.value);
            }
        }
    }

    #[test]
    fn numeric_tends_to_domain_volume_at_center() {
        let p = [1.0, 2.0];
        let num = indicatrix_volume_numeric(&p, 1e-3, ENVELOPE_GRID).unwrap();
        let vol = volume(&DomainSpec::ellipsoid(p.to_vec()).unwrap()).unwrap();
        assert!(rel(num.value, vol) < 1e-2);
    }

    #[test]
    fn profile_volume_from_arcs() {
        let prof = kobayashi_arcs(&[0.5, 1.0], 0.5, 8 * ENVELOPE_GRID).unwrap();
        let closed = indicatrix_volume_closed(&EllipsoidFamilyParams::new(1.0, 2, 0.5).unwrap());
        assert!(rel(prof.volume().unwrap(), closed) < 1e-4);
        let csv = prof.to_csv(0).unwrap();
        assert!(csv.starts_with("branch,u,rho,S\n"));
    }

    #[test]
    fn gap_is_reported() {
        let full = sample_arc(&[0.5, 1.0], 0.5, Branch::NotInA, 64).unwrap();
        let err = envelope_volume(&[&full[..10], &full[40..]], 1.0, 256).unwrap_err();
        assert!(matches!(err, Error::EnvelopeGap { .. }));
    }

    #[test]
    fn radial_csv() {
        let csv = azukawa_g2_center::<f64>().to_csv(3).unwrap();
        assert_eq!(csv, "r,gamma\n0e0,1e0\n1e0,5e-1\n2e0,0e0\n");
    }
}
