#![allow(clippy::excessive_precision)]

use crate::scalar::Real;

// Lanczos approximation, g = 7, nine coefficients.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum<T: Real>(x: T) -> T {
    // x is the shifted argument z - 1
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_count(i));
    }
    acc
}

/// Gamma function.
pub fn gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // reflection
        let pi = T::PI();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    if x == x.floor() && x <= T::lit(24.0) {
        let mut acc = T::one();
        let mut k = T::lit(2.0);
        while k < x {
            acc = acc * k;
            k = k + T::one();
        }
        return acc;
    }
    let z = x - T::one();
    let t = z + T::lit(LANCZOS_G) + half;
    (T::lit(2.0) * T::PI()).sqrt() * t.powf(z + half) * (-t).exp() * lanczos_sum(z)
}

/// Natural log of the Gamma function for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        let pi = T::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    let z = x - T::one();
    let t = z + T::lit(LANCZOS_G) + half;
    half * (T::lit(2.0) * T::PI()).ln() + (z + half) * t.ln() - t + lanczos_sum(z).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integers_exact() {
        assert_eq!(gamma(1.0f64), 1.0);
        assert_eq!(gamma(2.0f64), 1.0);
        assert_eq!(gamma(5.0f64), 24.0);
        assert_eq!(gamma(11.0f64), 3_628_800.0);
    }

    #[test]
    fn half_integers() {
        assert!((gamma(0.5f64) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(3.5f64) - 15.0 / 8.0 * PI.sqrt()).abs() < 1e-13);
        assert!((gamma(-0.5f64) + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn log_gamma() {
        assert!((ln_gamma(100.0f64) - 359.134_205_369_575_4).abs() < 1e-11);
        assert!((ln_gamma(0.5f64) - 0.5 * PI.ln()).abs() < 1e-14);
        assert!(ln_gamma(1.0f64).abs() < 1e-14);
        for &x in &[0.3, 1.7, 4.2, 9.9, 17.25] {
            let g: f64 = gamma(x);
            assert!((ln_gamma(x) - g.ln()).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn recurrence() {
        for &x in &[0.25f64, 1.3, 2.75, 6.1, 12.4] {
            let lhs = gamma(x + 1.0);
            let rhs = x * gamma(x);
            assert!((lhs - rhs).abs() <= 2e-14 * lhs.abs(), "x = {x}");
        }
    }

    #[test]
    fn single_precision() {
        assert!((gamma(4.5f32) - 11.631_728).abs() < 1e-4);
    }
}
