//! Planar Green functions with a logarithmic pole: the disk in closed form
//! and the annulus `r < |z| < 1` by separation of variables.
//!
//! On the annulus `G(z) = log|z - w| + H(z)` where the harmonic correction
//! is
//!
//! ```text
//! H = A + B log|z| + sum_k (c_k rho^k + d_k rho^-k) cos k(theta - phi),   w = |w| e^{i phi}
//! ```
//!
//! and each frequency solves a 2x2 system matching `-log|z - w|` on both
//! boundary circles.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::domains::DomainSpec;
use crate::error::{Error, Result};
use crate::numerics::{estimate_fraction, find_root_monotone, SampleStream, Tolerance};
use crate::scalar::Real;

/// Largest inner radius the annulus solver accepts.
pub const MAX_INNER_RADIUS: f64 = 0.999;
const MAX_TRUNCATION: usize = 200_000;

/// Rays used to trace a level curve.
pub const LEVEL_RAYS: usize = 4096;
/// Levels whose traced curve gets closer than this to a critical point
/// (in gradient norm) are refused.
pub const MIN_LEVEL_GRADIENT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanarDomain<T = f64> {
    Disk,
    Annulus { r: T },
}

impl<T: Real> PlanarDomain<T> {
    pub fn contains(&self, z: Complex<T>) -> bool {
        let m = z.norm();
        match self {
            PlanarDomain::Disk => m < T::one(),
            PlanarDomain::Annulus { r } => m > *r && m < T::one(),
        }
    }

    pub fn area(&self) -> T {
        match self {
            PlanarDomain::Disk => T::PI(),
            PlanarDomain::Annulus { r } => T::PI() * (T::one() - *r * *r),
        }
    }

    pub fn spec(&self) -> DomainSpec<T> {
        match self {
            PlanarDomain::Disk => DomainSpec::disk(),
            PlanarDomain::Annulus { r } => DomainSpec::Annulus { r: *r },
        }
    }
}

/// Truncated series for the Green function `G(., w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenSeries1D<T = f64> {
    pub domain: PlanarDomain<T>,
    pub pole: Complex<T>,
    pub truncation: usize,
    /// Constant term `A`.
    pub constant: T,
    /// Coefficient `B` of `log|z|`.
    pub log_coefficient: T,
    /// `c_k`, coefficient of `rho^k cos k(theta - phi)`, for `k = 1..=N`.
    pub outer: Vec<T>,
    /// `d_k`, coefficient of `rho^-k cos k(theta - phi)`.
    pub inner: Vec<T>,
    /// Robin constant `lim (G(z) - log|z - w|)` as `z -> w`.
    pub robin: T,
    /// Bound on the dropped tail of `H` over the closed annulus.
    pub tail_bound: T,
}

fn annulus_tail<T: Real>(r: T, q_out: T, q_in: T, n: usize) -> T {
    let k = T::from_count(n + 1);
    let one = T::one();
    q_out.powf(k) / (k * (one - q_out)) + T::lit(2.0) * q_in.powf(k) / (k * (one - q_in) * (one - r * r))
}

impl<T: Real> GreenSeries1D<T> {
    /// Green function of the unit disk, `log |z - w| / |1 - conj(w) z|`.
    pub fn disk(pole: Complex<T>) -> Result<Self> {
        if !(pole.norm() < T::one()) {
            return Err(Error::OutsideDomain(format!(
                "pole {} is not in the unit disk",
                pole
            )));
        }
        Ok(GreenSeries1D {
            domain: PlanarDomain::Disk,
            pole,
            truncation: 0,
            constant: T::zero(),
            log_coefficient: T::zero(),
            outer: Vec::new(),
            inner: Vec::new(),
            robin: -(T::one() - pole.norm_sqr()).ln(),
            tail_bound: T::zero(),
        })
    }

    fn phase(&self) -> Complex<T> {
        let m = self.pole.norm();
        if m == T::zero() {
            Complex::new(T::one(), T::zero())
        } else {
            self.pole / m
        }
    }

    /// Harmonic correction `H = G - log|z - w|`.
    pub fn harmonic_part(&self, z: Complex<T>) -> T {
        match self.domain {
            PlanarDomain::Disk => -(Complex::new(T::one(), T::zero()) - self.pole.conj() * z).norm().ln(),
            PlanarDomain::Annulus { .. } => {
                let u = self.phase();
                let zeta = z * u.conj();
                let eta = u / z;
                let mut p = Complex::new(T::zero(), T::zero());
                for &c in self.outer.iter().rev() {
                    p = (p + c) * zeta;
                }
                let mut q = Complex::new(T::zero(), T::zero());
                for &d in self.inner.iter().rev() {
                    q = (q + d) * eta;
                }
                self.constant + self.log_coefficient * z.norm().ln() + p.re + q.re
            }
        }
    }

    /// `G(z)`; `-inf` at the pole.
    pub fn eval(&self, z: Complex<T>) -> T {
        (z - self.pole).norm().ln() + self.harmonic_part(z)
    }

    /// Holomorphic derivative `f'` of a local primitive `f` with `G = Re f`;
    /// the gradient of `G` is `conj(f')` and `|grad G| = |f'|`.
    pub fn complex_derivative(&self, z: Complex<T>) -> Complex<T> {
        let one = Complex::new(T::one(), T::zero());
        let pole_term = one / (z - self.pole);
        match self.domain {
            PlanarDomain::Disk => {
                let wc = self.pole.conj();
                pole_term + wc / (one - wc * z)
            }
            PlanarDomain::Annulus { .. } => {
                let u = self.phase();
                let zeta = z * u.conj();
                let eta = u / z;
                // P'(zeta) = sum k c_k zeta^(k-1), Q = sum k d_k eta^k
                let mut dp = Complex::new(T::zero(), T::zero());
                for (i, &c) in self.outer.iter().enumerate().rev() {
                    dp = dp * zeta + c * T::from_count(i + 1);
                }
                let mut q = Complex::new(T::zero(), T::zero());
                for (i, &d) in self.inner.iter().enumerate().rev() {
                    q = (q + d * T::from_count(i + 1)) * eta;
                }
                pole_term + one * self.log_coefficient / z + u.conj() * dp - q / z
            }
        }
    }

    pub fn gradient_norm(&self, z: Complex<T>) -> T {
        self.complex_derivative(z).norm()
    }

    /// `sup |z - w|` over the domain.
    pub fn diameter_from_pole(&self) -> T {
        T::one() + self.pole.norm()
    }

    /// Distance from the pole to the boundary.
    pub fn boundary_distance(&self) -> T {
        let m = self.pole.norm();
        match self.domain {
            PlanarDomain::Disk => T::one() - m,
            PlanarDomain::Annulus { r } => (T::one() - m).min(m - r),
        }
    }

    /// `sup |G|` over `samples` equispaced points on each boundary circle.
    pub fn boundary_residual(&self, samples: usize) -> T {
        let mut circles = vec![T::one()];
        if let PlanarDomain::Annulus { r } = self.domain {
            circles.push(r);
        }
        let mut worst = T::zero();
        for rad in circles {
            for i in 0..samples {
                let theta = T::lit(2.0) * T::PI() * T::from_count(i) / T::from_count(samples);
                let z = Complex::from_polar(rad, theta);
                worst = worst.max(self.eval(z).abs());
            }
        }
        worst
    }

    /// Signed flux `integral over |z| = s of dG/drho` (outward radial
    /// derivative), by the trapezoid rule. The circle must avoid the pole.
    pub fn circle_flux(&self, s: T, samples: usize) -> T {
        let h = T::lit(2.0) * T::PI() / T::from_count(samples);
        (0..samples)
            .map(|i| {
                let e = Complex::from_polar(T::one(), h * T::from_count(i));
                (self.complex_derivative(e * s) * e).re * s
            })
            .sum::<T>()
            * h
    }
}

/// Solves for the Green function of `r < |z| < 1` with pole `w`.
///
/// The truncation `N` is the smallest with a geometric tail bound below
/// `tol.abs_tol`.
pub fn solve_green_annulus<T: Real>(r: T, w: Complex<T>, tol: &Tolerance<T>) -> Result<GreenSeries1D<T>> {
    tol.validate()?;
    if !(r > T::zero() && r < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "annulus inner radius must lie in (0, 1), got {}",
            r.to_f64_lossy()
        )));
    }
    if r > T::lit(MAX_INNER_RADIUS) {
        return Err(Error::InvalidParameter(format!(
            "inner radius {} too close to 1 for the series solver",
            r.to_f64_lossy()
        )));
    }
    let m = w.norm();
    if !(m > r && m < T::one()) {
        return Err(Error::OutsideDomain(format!(
            "pole {} is not in the annulus {} < |z| < 1",
            w,
            r.to_f64_lossy()
        )));
    }

    let q_out = m;
    let q_in = r / m;
    let mut n = 1;
    while annulus_tail(r, q_out, q_in, n) > tol.abs_tol {
        n *= 2;
        if n > MAX_TRUNCATION {
            return Err(Error::Convergence {
                what: "solve_green_annulus",
                iterations: n,
                estimate: annulus_tail(r, q_out, q_in, n).to_f64_lossy(),
            });
        }
    }
    // shrink back to the smallest admissible N
    let (mut lo, mut hi) = (n / 2, n);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if annulus_tail(r, q_out, q_in, mid) > tol.abs_tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n = hi;

    let log_r = r.ln();
    let constant = T::zero();
    let log_coefficient = -m.ln() / log_r;
    let mut outer = Vec::with_capacity(n);
    let mut inner = Vec::with_capacity(n);
    let r2 = r * r;
    for k in 1..=n {
        let kk = T::from_count(k);
        let mk = m.powf(kk);
        let r2k = r2.powf(kk);
        // c + d = |w|^k / k,  c r^k + d r^-k = (r / |w|)^k / k
        let d = r2k * (mk.recip() - mk) / (kk * (T::one() - r2k));
        outer.push(mk / kk - d);
        inner.push(d);
    }

    let mut series = GreenSeries1D {
        domain: PlanarDomain::Annulus { r },
        pole: w,
        truncation: n,
        constant,
        log_coefficient,
        outer,
        inner,
        robin: T::zero(),
        tail_bound: annulus_tail(r, q_out, q_in, n),
    };
    series.robin = series.harmonic_part(w);
    Ok(series)
}

/// Logarithmic capacity `c(w) = exp(robin)`. For the disk this is
/// `1 / (1 - |w|^2)`.
pub fn robin_capacity<T: Real>(green: &GreenSeries1D<T>) -> T {
    green.robin.exp()
}

/// Universal covering `p : unit disk -> {r < |z| < 1}`,
/// `p(zeta) = exp((log r / (pi i)) Log(i (1 + zeta) / (1 - zeta)))`, with
/// `p(0) = sqrt r`.
pub fn covering_map<T: Real>(r: T, zeta: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let factor = Complex::new(r.ln(), T::zero()) / (i * T::PI());
    (factor * (i * (one + zeta) / (one - zeta)).ln()).exp()
}

/// `p'(zeta) = p(zeta) (log r / (pi i)) 2 / (1 - zeta^2)`.
pub fn covering_map_derivative<T: Real>(r: T, zeta: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let factor = Complex::new(r.ln(), T::zero()) / (i * T::PI());
    covering_map(r, zeta) * factor * T::lit(2.0) / (one - zeta * zeta)
}

/// Upper bound `1 / |p'(0)| = pi / (-2 sqrt(r) log r)` for `c(sqrt r)` on the
/// annulus.
pub fn covering_capacity_bound<T: Real>(r: T) -> Result<T> {
    if !(r > T::zero() && r < T::one()) {
        return Err(Error::InvalidParameter("inner radius must lie in (0, 1)".into()));
    }
    Ok(T::PI() / (-T::lit(2.0) * r.sqrt() * r.ln()))
}

/// Hit-counting estimate of a sublevel-set area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SublevelEstimate<T = f64> {
    pub value: T,
    pub std_error: T,
    /// False when the standard error exceeds the value.
    pub resolved: bool,
}

/// `lambda({G < t})` by hit counting.
///
/// Since `G >= log(|z - w| / D)` with `D = sup |z - w|`, the set lies in the
/// disk of radius `D e^t` about the pole, which is sampled uniformly.
pub fn sublevel_volume<T: Real>(
    green: &GreenSeries1D<T>,
    t: T,
    stream: &SampleStream,
    count: usize,
) -> Result<SublevelEstimate<T>> {
    if !(t <= T::zero()) {
        return Err(Error::InvalidParameter("level must be <= 0".into()));
    }
    if stream.dimension != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: stream.dimension,
        });
    }
    let radius = green.diameter_from_pole() * t.exp();
    let two_pi = T::lit(2.0) * T::PI();
    let (frac, se) = estimate_fraction(stream, count, |u| {
        let rho = radius * T::lit(u[0]).sqrt();
        let z = green.pole + Complex::from_polar(rho, two_pi * T::lit(u[1]));
        green.domain.contains(z) && green.eval(z) < t
    });
    let area = T::PI() * radius * radius;
    let value = area * T::lit(frac);
    let std_error = area * T::lit(se);
    Ok(SublevelEstimate {
        value,
        std_error,
        resolved: std_error <= value,
    })
}

/// `lambda({G < t}) = e^(2nt) lambda(Omega)` for a balanced domain with pole
/// at its center, where `G = log h`.
pub fn sublevel_volume_balanced<T: Real>(domain: &DomainSpec<T>, t: T) -> Result<T> {
    if !domain.is_balanced() {
        return Err(Error::Unsupported("exact sublevel volumes need a balanced domain".into()));
    }
    if !(t <= T::zero()) {
        return Err(Error::InvalidParameter("level must be <= 0".into()));
    }
    let n = T::from_count(domain.dimension());
    Ok((T::lit(2.0) * n * t).exp() * crate::domains::volume(domain)?)
}

/// `e^(-2nt) lambda({G < t})` for a balanced domain: `lambda(Omega)` for
/// every level.
pub fn normalized_sublevel_volume_balanced<T: Real>(domain: &DomainSpec<T>, t: T) -> Result<T> {
    if !domain.is_balanced() {
        return Err(Error::Unsupported("exact sublevel volumes need a balanced domain".into()));
    }
    if !(t <= T::zero()) {
        return Err(Error::InvalidParameter("level must be <= 0".into()));
    }
    crate::domains::volume(domain)
}

/// Sampled curve `t -> lambda({G < t})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublevelCurve<T = f64> {
    pub t: Vec<T>,
    pub lambda: Vec<T>,
    pub stderr: Vec<T>,
    /// `e^(-2t) lambda({G < t})`.
    pub normalized: Vec<T>,
}

impl<T: Real> SublevelCurve<T> {
    pub fn normalized_stderr(&self) -> Vec<T> {
        self.t
            .iter()
            .zip(&self.stderr)
            .map(|(&t, &se)| (-T::lit(2.0) * t).exp() * se)
            .collect()
    }

    /// CSV with header `t,lambda,stderr,normalized`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "lambda", "stderr", "normalized"])?;
        for i in 0..self.t.len() {
            w.write_record([
                format!("{:e}", self.t[i].to_f64_lossy()),
                format!("{:e}", self.lambda[i].to_f64_lossy()),
                format!("{:e}", self.stderr[i].to_f64_lossy()),
                format!("{:e}", self.normalized[i].to_f64_lossy()),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut curve = SublevelCurve {
            t: Vec::new(),
            lambda: Vec::new(),
            stderr: Vec::new(),
            normalized: Vec::new(),
        };
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| -> Result<T> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .map(T::lit)
                    .ok_or_else(|| Error::Io(format!("bad sublevel CSV field {i}")))
            };
            curve.t.push(field(0)?);
            curve.lambda.push(field(1)?);
            curve.stderr.push(field(2)?);
            curve.normalized.push(field(3)?);
        }
        Ok(curve)
    }
}

/// Samples the sublevel curve; level `i` uses `stream.split(i)`.
pub fn sublevel_curve<T: Real>(
    green: &GreenSeries1D<T>,
    t_grid: &[T],
    stream: &SampleStream,
    count: usize,
) -> Result<SublevelCurve<T>> {
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("t-grid must be strictly increasing".into()));
    }
    let mut curve = SublevelCurve {
        t: Vec::with_capacity(t_grid.len()),
        lambda: Vec::with_capacity(t_grid.len()),
        stderr: Vec::with_capacity(t_grid.len()),
        normalized: Vec::with_capacity(t_grid.len()),
    };
    for (i, &t) in t_grid.iter().enumerate() {
        let est = sublevel_volume(green, t, &stream.split(i as u64), count)?;
        curve.t.push(t);
        curve.lambda.push(est.value);
        curve.stderr.push(est.std_error);
        curve.normalized.push((-T::lit(2.0) * t).exp() * est.value);
    }
    Ok(curve)
}

/// Integrals over the level curve `{G = t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelQuantities<T = f64> {
    pub level: T,
    /// `integral |grad G| d sigma`; equals `2 pi`.
    pub flux: T,
    /// `integral d sigma / |grad G|`, the derivative of `lambda({G < t})`.
    pub density: T,
    /// `sigma({G = t})`.
    pub length: T,
    /// `lambda({G < t})` enclosed by the traced curve.
    pub area: T,
    /// `length^2 / (4 pi area)`; at least 1 by the isoperimetric inequality.
    pub iso_ratio: T,
    pub min_gradient: T,
    /// Number of boundary components of `{G < t}` (1 or 2).
    pub components: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Topology {
    AroundPole,
    Band,
}

// First positive exit distance from `w` along unit direction `e`.
fn exit_distance<T: Real>(domain: &PlanarDomain<T>, w: Complex<T>, e: Complex<T>) -> T {
    let b = (w * e.conj()).re;
    let w2 = w.norm_sqr();
    let outer = -b + (b * b - (w2 - T::one())).sqrt();
    match domain {
        PlanarDomain::Disk => outer,
        PlanarDomain::Annulus { r } => {
            let disc = b * b - (w2 - *r * *r);
            if disc >= T::zero() && b < T::zero() {
                let s = -b - disc.sqrt();
                if s > T::zero() {
                    return s.min(outer);
                }
            }
            outer
        }
    }
}

const RAY_SAMPLES: usize = 256;

fn crossings<T: Real, F: Fn(T) -> T>(g: &F, lo: T, hi: T, level: T) -> Result<Vec<T>> {
    let mut roots = Vec::new();
    let step = (hi - lo) / T::from_count(RAY_SAMPLES);
    let mut prev_s = lo;
    let mut prev = g(lo) - level;
    for j in 1..=RAY_SAMPLES {
        let s = if j == RAY_SAMPLES { hi } else { lo + step * T::from_count(j) };
        let cur = g(s) - level;
        if (prev < T::zero()) != (cur < T::zero()) {
            let root = find_root_monotone(|x| g(x) - level, prev_s, s, &Tolerance::machine())?;
            roots.push(root);
        }
        prev = cur;
        prev_s = s;
    }
    Ok(roots)
}

fn saddle_level<T: Real>(green: &GreenSeries1D<T>, r: T) -> T {
    // the critical point sits on the ray opposite the pole
    let e = -green.phase();
    let n = 2048;
    (1..n)
        .map(|j| {
            let rho = r + (T::one() - r) * T::from_count(j) / T::from_count(n);
            green.eval(e * rho)
        })
        .fold(T::infinity(), T::min)
}

/// Traces `{G = t}` with [`LEVEL_RAYS`] rays and integrates flux, co-area
/// density, length and enclosed area with the periodic trapezoid rule.
///
/// Near the pole the level curve is star-shaped about the pole; on the
/// annulus, once `t` exceeds the saddle value the sublevel set is a band
/// around the hole and both boundary curves are traced from the origin.
pub fn level_flux_and_isoperimetric<T: Real>(green: &GreenSeries1D<T>, t: T) -> Result<LevelQuantities<T>> {
    if !(t < T::zero()) {
        return Err(Error::InvalidParameter("level must be negative".into()));
    }
    let gap = T::lit(1e-6);
    let topology = match green.domain {
        PlanarDomain::Disk => Topology::AroundPole,
        PlanarDomain::Annulus { r } => {
            let saddle = saddle_level(green, r);
            if (t - saddle).abs() < gap {
                return Err(Error::CriticalLevel {
                    level: t.to_f64_lossy(),
                    reason: format!("saddle value is {}", saddle.to_f64_lossy()),
                });
            }
            if t < saddle {
                Topology::AroundPole
            } else {
                Topology::Band
            }
        }
    };

    let m = LEVEL_RAYS;
    let h = T::lit(2.0) * T::PI() / T::from_count(m);
    let critical = |reason: String| Error::CriticalLevel {
        level: t.to_f64_lossy(),
        reason,
    };

    // (center, sign, radius per ray) for each traced component
    let mut components: Vec<(Complex<T>, T, Vec<T>)> = Vec::new();
    match topology {
        Topology::AroundPole => {
            let w = green.pole;
            let s_lo = T::lit(0.5) * green.boundary_distance() * t.exp();
            let mut radii = Vec::with_capacity(m);
            for i in 0..m {
                let e = Complex::from_polar(T::one(), h * T::from_count(i));
                let s_hi = exit_distance(&green.domain, w, e) * (T::one() - T::lit(1e-12));
                let g = |s: T| green.eval(w + e * s);
                let roots = crossings(&g, s_lo, s_hi, t)?;
                if roots.len() != 1 {
                    return Err(critical(format!(
                        "level curve is not star-shaped about the pole ({} crossings on a ray)",
                        roots.len()
                    )));
                }
                radii.push(roots[0]);
            }
            components.push((w, T::one(), radii));
        }
        Topology::Band => {
            let PlanarDomain::Annulus { r } = green.domain else { unreachable!() };
            let origin = Complex::new(T::zero(), T::zero());
            let pad = (T::one() - r) * T::lit(1e-12);
            let mut inner = Vec::with_capacity(m);
            let mut outer = Vec::with_capacity(m);
            for i in 0..m {
                let e = Complex::from_polar(T::one(), h * T::from_count(i));
                let g = |s: T| green.eval(e * s);
                let roots = crossings(&g, r + pad, T::one() - pad, t)?;
                if roots.len() != 2 {
                    return Err(critical(format!(
                        "expected two crossings per ray for a band, found {}",
                        roots.len()
                    )));
                }
                inner.push(roots[0]);
                outer.push(roots[1]);
            }
            components.push((origin, T::one(), outer));
            components.push((origin, -T::one(), inner));
        }
    }

    let half = T::lit(0.5);
    let mut flux = T::zero();
    let mut density = T::zero();
    let mut length = T::zero();
    let mut area = T::zero();
    let mut min_gradient = T::infinity();
    for (center, sign, radii) in &components {
        for (i, &s) in radii.iter().enumerate() {
            let e = Complex::from_polar(T::one(), h * T::from_count(i));
            let z = *center + e * s;
            let fp = green.complex_derivative(z);
            let g_s = (fp * e).re;
            let g_theta = (fp * e * Complex::new(T::zero(), s)).re;
            if g_s.abs() < T::lit(MIN_LEVEL_GRADIENT) * T::lit(1e-2) {
                return Err(critical("ray tangent to the level curve".into()));
            }
            let ds = -g_theta / g_s;
            let speed = (ds * ds + s * s).sqrt();
            let grad = fp.norm();
            min_gradient = min_gradient.min(grad);
            length = length + speed * h;
            flux = flux + grad * speed * h;
            density = density + speed / grad * h;
            area = area + *sign * half * s * s * h;
        }
    }
    if min_gradient < T::lit(MIN_LEVEL_GRADIENT) {
        return Err(critical(format!(
            "gradient drops to {:e} on the level curve",
            min_gradient.to_f64_lossy()
        )));
    }
    Ok(LevelQuantities {
        level: t,
        flux,
        density,
        length,
        area,
        iso_ratio: length * length / (T::lit(4.0) * T::PI() * area),
        min_gradient,
        components: components.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn annulus(r: f64) -> GreenSeries1D<f64> {
        solve_green_annulus(r, c(r.sqrt(), 0.0), &Tolerance::default()).unwrap()
    }

    #[test]
    fn disk_closed_form() {
        let w = c(0.3, -0.2);
        let g = GreenSeries1D::disk(w).unwrap();
        let z = c(-0.1, 0.5);
        let expected = ((z - w) / (c(1.0, 0.0) - w.conj() * z)).norm().ln();
        assert!((g.eval(z) - expected).abs() < 1e-15);
        assert!(g.boundary_residual(720) < 1e-14);
    }

    #[test]
    fn disk_capacity() {
        assert_eq!(robin_capacity(&GreenSeries1D::disk(c(0.0, 0.0)).unwrap()), 1.0);
        let cap = robin_capacity(&GreenSeries1D::disk(c(0.5, 0.0)).unwrap());
        assert!((cap - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_residual_small() {
        for r in [0.1, 0.2, 0.5] {
            let g = annulus(r);
            assert!(g.boundary_residual(720) < 1e-8, "r = {r}");
            assert!(g.tail_bound <= 1e-12);
        }
        let off_axis = solve_green_annulus(0.3, c(-0.2, 0.45), &Tolerance::default()).unwrap();
        assert!(off_axis.boundary_residual(720) < 1e-8);
    }

    #[test]
    fn solver_rejects_bad_input() {
        let tol = Tolerance::default();
        assert!(matches!(
            solve_green_annulus(0.2, c(0.1, 0.0), &tol),
            Err(Error::OutsideDomain(_))
        ));
        assert!(solve_green_annulus(0.9995, c(0.9997, 0.0), &tol).is_err());
        assert!(solve_green_annulus(1.5, c(0.5, 0.0), &tol).is_err());
    }

    #[test]
    fn symmetric_in_pole_and_argument() {
        let tol = Tolerance::default();
        let r = 0.2;
        let mut state = 0x1234_5678_u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut point = || {
            let rho = r + (1.0 - r) * (0.05 + 0.9 * next());
            Complex::from_polar(rho, 2.0 * PI * next())
        };
        for _ in 0..20 {
            let (z, w) = (point(), point());
            let gw = solve_green_annulus(r, w, &tol).unwrap();
            let gz = solve_green_annulus(r, z, &tol).unwrap();
            assert!((gw.eval(z) - gz.eval(w)).abs() < 1e-8);
        }
    }

    #[test]
    fn inversion_symmetry() {
        let r = 0.2;
        let g = annulus(r);
        for &(rho, th) in &[(0.3, 0.4), (0.6, 2.0), (0.9, -1.1), (0.25, 3.0)] {
            let z = Complex::from_polar(rho, th);
            let image = c(r, 0.0) / z;
            assert!((g.eval(image) - g.eval(z)).abs() < 1e-8);
        }
    }

    #[test]
    fn negative_inside() {
        let r = 0.2;
        let g = annulus(r);
        for i in 0..100 {
            for j in 0..100 {
                let z = c(-1.0 + 2.0 * (i as f64 + 0.5) / 100.0, -1.0 + 2.0 * (j as f64 + 0.5) / 100.0);
                if !g.domain.contains(z) || (z - g.pole).norm() < 0.05 {
                    continue;
                }
                assert!(g.eval(z) < 0.0, "G({z}) = {}", g.eval(z));
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = solve_green_annulus(0.3, c(0.1, 0.5), &Tolerance::default()).unwrap();
        let z = c(-0.4, 0.35);
        let h = 1e-6;
        let gx = (g.eval(z + c(h, 0.0)) - g.eval(z - c(h, 0.0))) / (2.0 * h);
        let gy = (g.eval(z + c(0.0, h)) - g.eval(z - c(0.0, h))) / (2.0 * h);
        let grad = g.complex_derivative(z).conj();
        assert!((grad.re - gx).abs() < 1e-8 && (grad.im - gy).abs() < 1e-8);
        let d = GreenSeries1D::disk(c(0.2, 0.1)).unwrap();
        let gx = (d.eval(z + c(h, 0.0)) - d.eval(z - c(h, 0.0))) / (2.0 * h);
        assert!((d.complex_derivative(z).re - gx).abs() < 1e-8);
    }

    #[test]
    fn flux_through_region_boundaries() {
        let r = 0.2;
        let g = annulus(r);
        let w = g.pole.norm();
        let regions = [(1.01 * r, 0.99), (0.5 * (r + w), 0.99), (1.01 * r, 0.5 * (w + 1.0))];
        for (s_in, s_out) in regions {
            let flux = g.circle_flux(s_out, 4096) - g.circle_flux(s_in, 4096);
            assert!((flux - 2.0 * PI).abs() < 1e-6, "({s_in}, {s_out}): {flux}");
        }
        // region not containing the pole carries no net flux
        let flux = g.circle_flux(0.95, 4096) - g.circle_flux(0.8, 4096);
        assert!(flux.abs() < 1e-6);
    }

    #[test]
    fn capacity_below_covering_bound() {
        for r in [0.01, 0.1, 0.2, 0.5, 0.8] {
            let cap = robin_capacity(&annulus(r));
            let bound = covering_capacity_bound(r).unwrap();
            assert!(cap <= bound * (1.0 + 1e-12), "r = {r}: {cap} > {bound}");
        }
    }

    #[test]
    fn covering_map_values() {
        let r: f64 = 0.3;
        let p0 = covering_map(r, c(0.0, 0.0));
        assert!((p0 - c(r.sqrt(), 0.0)).norm() < 1e-15);
        let d0 = covering_map_derivative(r, c(0.0, 0.0));
        let expected = c(0.0, -2.0 * r.sqrt() * r.ln() / PI);
        assert!((d0 - expected).norm() < 1e-15);
        let bound = covering_capacity_bound((-PI).exp()).unwrap();
        assert!((bound - (PI / 2.0).exp() / 2.0).abs() < 1e-14);
        // p maps the disk into the annulus
        for &(rho, th) in &[(0.5, 0.3), (0.9, 2.0), (0.99, -2.5)] {
            let z = covering_map(r, Complex::from_polar(rho, th));
            assert!(z.norm() > r && z.norm() < 1.0);
        }
    }

    #[test]
    fn subordination_under_covering() {
        // G(p(zeta), sqrt r) <= log |zeta|
        let r = 0.2;
        let g = annulus(r);
        for &(rho, th) in &[(0.1, 0.0), (0.4, 1.0), (0.7, -2.0), (0.95, 2.9)] {
            let zeta: Complex<f64> = Complex::from_polar(rho, th);
            assert!(g.eval(covering_map(r, zeta)) <= zeta.norm().ln() + 1e-12);
        }
    }

    #[test]
    fn disk_level_quantities() {
        let g = GreenSeries1D::disk(c(0.0, 0.0)).unwrap();
        for t in [-2.0, -0.5, -1e-3] {
            let q = level_flux_and_isoperimetric(&g, t).unwrap();
            let e2t = (2.0 * t).exp();
            assert!((q.flux - 2.0 * PI).abs() < 1e-10);
            assert!((q.density - 2.0 * PI * e2t).abs() < 1e-10);
            assert!((q.iso_ratio - 1.0).abs() < 1e-10);
            assert!((q.area - PI * e2t).abs() < 1e-10);
        }
        // t -> 0: density tends to 2 lambda(disk)
        let q = level_flux_and_isoperimetric(&g, -1e-9).unwrap();
        assert!((q.density - 2.0 * PI).abs() < 1e-7);
    }

    #[test]
    fn off_center_disk_levels_are_circles() {
        let g = GreenSeries1D::disk(c(0.4, 0.2)).unwrap();
        let q = level_flux_and_isoperimetric(&g, -1.0).unwrap();
        assert!((q.flux - 2.0 * PI).abs() < 1e-9);
        assert!((q.iso_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn annulus_level_quantities() {
        let g = annulus(0.2);
        for t in [-3.0, -2.0, -1.0] {
            let q = level_flux_and_isoperimetric(&g, t).unwrap();
            assert_eq!(q.components, 1);
            assert!((q.flux - 2.0 * PI).abs() < 1e-6, "t = {t}: flux {}", q.flux);
            assert!(q.iso_ratio >= 1.0 - 1e-6);
            assert!(q.density >= 2.0 * q.area);
        }
        let q = level_flux_and_isoperimetric(&g, -0.003).unwrap();
        assert_eq!(q.components, 2);
        assert!((q.flux - 2.0 * PI).abs() < 1e-6, "band flux {}", q.flux);
        assert!(q.iso_ratio >= 1.0);
        assert!(q.density >= 2.0 * q.area);
    }

    #[test]
    fn critical_level_refused() {
        let g = annulus(0.2);
        let saddle = saddle_level(&g, 0.2);
        let err = level_flux_and_isoperimetric(&g, saddle).unwrap_err();
        assert!(matches!(err, Error::CriticalLevel { .. }));
    }

    #[test]
    fn disk_sublevel_volume() {
        let g = GreenSeries1D::disk(c(0.0, 0.0)).unwrap();
        let t = -1.0;
        let est = sublevel_volume(&g, t, &SampleStream::low_discrepancy(2, 0), 1 << 18).unwrap();
        let exact = PI * (2.0 * t).exp();
        assert!(est.resolved);
        assert!((est.value - exact).abs() < 4.0 * est.std_error.max(1e-6));
    }

    #[test]
    fn balanced_sublevel_identity() {
        let e = DomainSpec::ellipsoid(vec![0.5, 0.5]).unwrap();
        let vol = crate::domains::volume(&e).unwrap();
        assert_eq!(normalized_sublevel_volume_balanced(&e, -1.0).unwrap(), vol);
        let v = sublevel_volume_balanced(&e, -1.0).unwrap();
        assert!(((-4.0f64).exp().recip() * v - PI * PI / 6.0).abs() < 1e-13);
        assert!(sublevel_volume_balanced(&DomainSpec::annulus(0.2).unwrap(), -1.0).is_err());
    }

    #[test]
    fn sublevel_curve_csv_roundtrip() {
        let g = GreenSeries1D::disk(c(0.0, 0.0)).unwrap();
        let curve = sublevel_curve(&g, &[-2.0, -1.0], &SampleStream::low_discrepancy(2, 3), 4096).unwrap();
        let text = curve.to_csv().unwrap();
        assert!(text.starts_with("t,lambda,stderr,normalized\n"));
        let back = SublevelCurve::<f64>::from_csv(&text).unwrap();
        assert_eq!(back, curve);
        assert!(sublevel_curve(&g, &[-1.0, -2.0], &SampleStream::low_discrepancy(2, 3), 16).is_err());
    }

    proptest! {
        #[test]
        fn annulus_green_negative_and_bounded(rho in 0.21f64..0.99, th in 0.0f64..std::f64::consts::TAU) {
            let g = annulus(0.2);
            let z = Complex::from_polar(rho, th);
            let val = g.eval(z);
            prop_assert!(val < 1e-12);
            prop_assert!(val >= ((z - g.pole).norm() / g.diameter_from_pole()).ln() - 1e-12);
        }
    }
}
