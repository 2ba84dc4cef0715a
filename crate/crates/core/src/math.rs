//! Float helpers for `no_std` builds plus the π-periodic angle conventions
//! shared by the hidden-variable code.

#![allow(missing_docs)]

pub use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}
#[inline]
pub fn atan(x: f64) -> f64 {
    libm::atan(x)
}
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}
#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Reduces an angle into `[0, π)`; polarization axes are π-periodic.
#[inline]
pub fn wrap_pi(x: f64) -> f64 {
    let r = x - PI * floor(x / PI);
    if !(0.0..PI).contains(&r) {
        0.0
    } else {
        r
    }
}

/// Distance between two polarization axes, in `[0, π/2]`.
#[inline]
pub fn axis_distance(a: f64, b: f64) -> f64 {
    let r = wrap_pi(a - b);
    if r > FRAC_PI_2 {
        PI - r
    } else {
        r
    }
}

/// Trigamma function ψ'(x) for `x > 0`.
///
/// Shifts the argument up with ψ'(x) = ψ'(x + 1) + 1/x² and then applies the
/// asymptotic series; absolute error is below 1e-14 for every `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x²) + Σ B_2k / x^(2k+1)
    let series = inv
        + 0.5 * inv2
        + inv
            * inv2
            * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))));
    acc + series
}

/// Hurwitz zeta `ζ(4, x) = Σ_{k≥0} (x + k)⁻⁴` for `x > 0`, equal to `ψ'''(x)/6`.
pub fn hurwitz_zeta4(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        let x2 = x * x;
        acc += 1.0 / (x2 * x2);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * inv2
        * (1.0 / 3.0
            + inv * 0.5
            + inv2 * (1.0 / 3.0 - inv2 * (1.0 / 6.0 - inv2 * (2.0 / 9.0 - inv2 * (0.5 - inv2 * 5.0 / 3.0)))));
    acc + series
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_stays_in_half_open_range() {
        for x in [-7.0, -PI, -1e-300, 0.0, 1.0, PI, 2.0 * PI - 1e-15, 1e6] {
            let w = wrap_pi(x);
            assert!((0.0..PI).contains(&w), "{x} -> {w}");
        }
        assert!((wrap_pi(PI / 8.0 - PI / 4.0) - 7.0 * PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn axis_distance_is_pi_periodic() {
        assert!(axis_distance(0.1, 0.1 + 3.0 * PI) < 1e-12);
        assert!((axis_distance(0.0, PI / 3.0) - PI / 3.0).abs() < 1e-15);
        assert!((axis_distance(0.0, 2.0 * PI / 3.0) - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn trigamma_known_values() {
        // ψ'(1) = π²/6, ψ'(1/2) = π²/2
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-13);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-13);
        // direct summation oracle at a large argument
        let x = 40.3;
        let direct: f64 = (0..2_000_000)
            .map(|k| 1.0 / ((x + k as f64) * (x + k as f64)))
            .sum::<f64>()
            + 1.0 / (x + 2_000_000.0);
        assert!((trigamma(x) - direct).abs() < 1e-12);
    }

    #[test]
    fn hurwitz_zeta4_known_values() {
        // ζ(4) = π⁴/90
        assert!((hurwitz_zeta4(1.0) - PI.powi(4) / 90.0).abs() < 1e-14);
        let x = 17.25;
        let direct: f64 = (0..200_000).map(|k| (x + k as f64).powi(-4)).sum();
        assert!((hurwitz_zeta4(x) - direct).abs() < 1e-11 * direct);
    }
}
