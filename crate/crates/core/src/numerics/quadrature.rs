#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::numerics::Tolerance;
use crate::scalar::Real;

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub panels: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn kronrod<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Panel<T> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kron = kron + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    Panel {
        a,
        b,
        value: kron * radius,
        error: ((kron - gauss) * radius).abs(),
    }
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]`.
pub fn integrate_1d<T, F>(f: F, a: T, b: T, tol: &Tolerance<T>) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    integrate_1d_with_knots(f, a, b, &[], tol).map(|q| q.value)
}

/// Adaptive Gauss–Kronrod integral with the initial partition split at
/// `knots`, so kinks of a piecewise integrand sit on panel boundaries.
///
/// `max_iter` bounds the number of panel bisections.
pub fn integrate_1d_with_knots<T, F>(
    mut f: F,
    a: T,
    b: T,
    knots: &[T],
    tol: &Tolerance<T>,
) -> Result<Quadrature<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    tol.validate()?;
    if !(a <= b) {
        return Err(Error::InvalidParameter(format!(
            "integration bounds out of order: [{}, {}]",
            a.to_f64_lossy(),
            b.to_f64_lossy()
        )));
    }
    if a == b {
        return Ok(Quadrature {
            value: T::zero(),
            error: T::zero(),
            panels: 0,
            evaluations: 0,
        });
    }

    let mut cuts: Vec<T> = knots.iter().copied().filter(|&k| k > a && k < b).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite knots"));
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut panels: Vec<Panel<T>> = edges.windows(2).map(|w| kronrod(&mut f, w[0], w[1])).collect();
    let mut evaluations = 15 * panels.len();
    let tiny = T::lit(16.0) * T::epsilon();

    let mut bisections = 0;
    loop {
        let value: T = panels.iter().map(|p| p.value).sum();
        let error: T = panels.iter().map(|p| p.error).sum();
        if error <= tol.bound(value) {
            return Ok(Quadrature {
                value,
                error,
                panels: panels.len(),
                evaluations,
            });
        }
        // worst panel that can still be split
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| (p.b - p.a) > tiny * (p.a.abs() + p.b.abs()))
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).expect("finite error"))
            .map(|(i, _)| i);
        let Some(idx) = worst else {
            // all panels at resolution limit
            return Ok(Quadrature {
                value,
                error,
                panels: panels.len(),
                evaluations,
            });
        };
        if bisections >= tol.max_iter {
            return Err(Error::Convergence {
                what: "integrate_1d",
                iterations: bisections,
                estimate: error.to_f64_lossy(),
            });
        }
        let p = panels.swap_remove(idx);
        let mid = T::lit(0.5) * (p.a + p.b);
        panels.push(kronrod(&mut f, p.a, mid));
        panels.push(kronrod(&mut f, mid, p.b));
        evaluations += 30;
        bisections += 1;
    }
}
