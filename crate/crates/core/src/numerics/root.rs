use crate::error::{Error, Result};
use crate::numerics::Tolerance;
use crate::scalar::Real;

/// Root of a continuous monotone function on a sign-changing bracket.
///
/// Secant steps are taken while they stay inside the bracket and shrink it by
/// at least half; otherwise the step falls back to bisection. Stops when
/// `|f(x)| <= abs_tol` or the bracket width drops below `rel_tol * |x|`.
pub fn find_root_monotone<T, F>(mut f: F, lo: T, hi: T, tol: &Tolerance<T>) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    tol.validate()?;
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::Bracket {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
            flo: flo.to_f64_lossy(),
            fhi: fhi.to_f64_lossy(),
        });
    }

    let half = T::lit(0.5);
    let mut force_bisect = false;
    for _ in 0..tol.max_iter {
        let width = hi - lo;
        let secant = hi - fhi * (hi - lo) / (fhi - flo);
        let x = if !force_bisect && secant > lo && secant < hi {
            secant
        } else {
            lo + half * width
        };
        if x <= lo || x >= hi {
            // bracket exhausted at working precision
            return Ok(if flo.abs() < fhi.abs() { lo } else { hi });
        }
        let fx = f(x);
        if fx.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "function is NaN at x = {}",
                x.to_f64_lossy()
            )));
        }
        if fx.abs() <= tol.abs_tol || fx == T::zero() {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        let new_width = hi - lo;
        force_bisect = new_width > half * width;
        if new_width <= tol.rel_tol * x.abs() {
            return Ok(if flo.abs() < fhi.abs() { lo } else { hi });
        }
    }
    Err(Error::Convergence {
        what: "find_root_monotone",
        iterations: tol.max_iter,
        estimate: (hi - lo).to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tol() -> Tolerance<f64> {
        Tolerance::default()
    }

    #[test]
    fn sqrt_two() {
        let x = find_root_monotone(|x: f64| x * x - 2.0, 0.0, 2.0, &tol()).unwrap();
        assert!((x - std::f64::consts::SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn linear_and_log() {
        let x = find_root_monotone(|x: f64| x - 0.5, 0.0, 1.0, &tol()).unwrap();
        assert!((x - 0.5).abs() < 1e-12);
        let x = find_root_monotone(|x: f64| x.ln(), 0.5, 2.0, &tol()).unwrap();
        assert!((x - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bracket_error() {
        let err = find_root_monotone(|x: f64| x * x + 1.0, -1.0, 1.0, &tol()).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn convergence_error() {
        let t = Tolerance::new(0.0, 1e-15, 3).unwrap();
        let err = find_root_monotone(|x: f64| x.powi(3) - 0.3, 0.0, 1.0, &t).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }

    #[test]
    fn machine_tolerance_is_tight() {
        let x = find_root_monotone(|x: f64| x.exp() - 3.0, 0.0, 5.0, &Tolerance::machine()).unwrap();
        assert!((x - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn works_in_f32() {
        let x = find_root_monotone(|x: f32| x * x - 2.0, 0.0, 2.0, &Tolerance::default()).unwrap();
        assert!((x - std::f32::consts::SQRT_2).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn bracket_stable(c in 0.1f64..5.0, d in -3.0f64..3.0) {
            let f = |x: f64| x.powi(3) + c * x - d;
            let t = tol();
            let x = find_root_monotone(f, -5.0, 5.0, &t).unwrap();
            let delta = 1e-8;
            let y = find_root_monotone(f, x - delta, x + delta, &t).unwrap();
            prop_assert!((x - y).abs() <= delta);
            prop_assert!(f(x).abs() <= 1e-8);
        }
    }
}
