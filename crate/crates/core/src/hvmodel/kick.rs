//! Lorentz kicks, optionally truncated at `|Δφ| ≤ 1/δα`.
//!
//! The density is `M · (1/π) · δφ_L / (δφ_L² + Δφ²)` on `[-1/δα, 1/δα]`,
//! with `M = 1 / ((2/π)·atan(1/(δα·δφ_L)))`; the untruncated law has `M = 1`.
//!
//! Besides sampling, [`KickLaw::window_mass`] gives the probability that a
//! kick lands in a π-periodic family of windows. That quantity is the
//! acceptance probability of one constrained wire, and is computed from the
//! wrapped-Cauchy arc mass minus the (tiny) part of the windows beyond the
//! truncation.

use rand::Rng;

use crate::math::{self, FRAC_PI_2, PI};

/// Invalid kick parameters.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum KickError {
    /// Width must be positive and finite.
    #[error("kick width must be positive and finite, got {0}")]
    Width(f64),
    /// Truncation parameter must be non-negative and finite.
    #[error("truncation parameter must be non-negative and finite, got {0}")]
    Truncation(f64),
}

/// Parameters of one kick layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KickParams {
    width: f64,
    truncation: Option<f64>,
    law: KickLaw,
}

impl KickParams {
    /// `width` = δφ_L; `truncation` = δα (`None` or `0` for a pure Lorentz).
    pub fn new(width: f64, truncation: Option<f64>) -> Result<Self, KickError> {
        if width <= 0.0 || !width.is_finite() {
            return Err(KickError::Width(width));
        }
        let truncation = match truncation {
            Some(a) if a < 0.0 || !a.is_finite() => return Err(KickError::Truncation(a)),
            Some(0.0) => None,
            other => other,
        };
        let cutoff = truncation.map_or(f64::INFINITY, |a| 1.0 / a);
        Ok(Self {
            width,
            truncation,
            law: KickLaw::new(width, cutoff),
        })
    }

    /// Untruncated Lorentz of the given width.
    pub fn lorentz(width: f64) -> Result<Self, KickError> {
        Self::new(width, None)
    }

    /// δφ_L.
    pub fn width(&self) -> f64 {
        self.width
    }

    /// δα, when truncated.
    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    /// Cutoff `1/δα` (infinite when untruncated).
    pub fn cutoff(&self) -> f64 {
        self.law.cutoff
    }

    /// Normalization `M` (1 when untruncated).
    pub fn normalization(&self) -> f64 {
        self.law.norm
    }

    /// The sampling/integration view of these parameters.
    pub fn law(&self) -> &KickLaw {
        &self.law
    }
}

/// `M(δφ_L, δα) = 1 / ((2/π)·atan(1/(δα·δφ_L)))`.
pub fn normalization_constant(width: f64, truncation: f64) -> Result<f64, KickError> {
    if width <= 0.0 || !width.is_finite() {
        return Err(KickError::Width(width));
    }
    if truncation <= 0.0 || !truncation.is_finite() {
        return Err(KickError::Truncation(truncation));
    }
    Ok(1.0 / ((2.0 / PI) * math::atan(1.0 / (truncation * width))))
}

/// Draws one kick.
pub fn sample_kick<R: Rng + ?Sized>(params: &KickParams, rng: &mut R) -> f64 {
    params.law.sample(rng)
}

/// Symmetric (truncated) Lorentz law with precomputed constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KickLaw {
    width: f64,
    cutoff: f64,
    norm: f64,
    /// atan(cutoff / width); π/2 when untruncated.
    half_angle: f64,
    /// coth(width): wrapped-Cauchy shape factor on the doubled circle.
    coth: f64,
}

impl KickLaw {
    fn new(width: f64, cutoff: f64) -> Self {
        let half_angle = if cutoff.is_finite() {
            math::atan(cutoff / width)
        } else {
            FRAC_PI_2
        };
        Self {
            width,
            cutoff,
            norm: FRAC_PI_2 / half_angle,
            half_angle,
            coth: 1.0 / math::tanh(width),
        }
    }

    /// Inverse-CDF draw: `Δφ = δφ_L·tan(atan(T/δφ_L)·(2u - 1))`, which reduces
    /// to `δφ_L·tan(π(u - ½))` without truncation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let x = self.width * math::tan(self.half_angle * (2.0 * u - 1.0));
        x.clamp(-self.cutoff, self.cutoff)
    }

    /// Probability density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        if math::abs(x) > self.cutoff {
            0.0
        } else {
            self.norm * self.width / (PI * (self.width * self.width + x * x))
        }
    }

    /// Cumulative distribution at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(-self.cutoff, self.cutoff);
        0.5 + math::atan(x / self.width) / (2.0 * self.half_angle)
    }

    /// Probability of `[lo, hi]`.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (lo.max(-self.cutoff), hi.min(self.cutoff));
        if hi <= lo {
            return 0.0;
        }
        self.norm * lorentz_interval(self.width, lo, hi)
    }

    /// Cutoff `T`.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Width δφ_L.
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Probability that the kick lands in `⋃ₙ [center + nπ - h, center + nπ + h]`.
    ///
    /// Requires `0 ≤ h < π/2`.
    pub fn window_mass(&self, center: f64, half_width: f64) -> f64 {
        debug_assert!((0.0..FRAC_PI_2).contains(&half_width));
        let wrapped = wrapped_window_mass(self.coth, center, half_width);
        if !self.cutoff.is_finite() {
            return wrapped;
        }
        let outside = self.outside_right(center, half_width) + self.outside_right(-center, half_width);
        (self.norm * (wrapped - outside)).max(0.0)
    }

    /// Untruncated mass of the window family intersected with `(T, ∞)`.
    fn outside_right(&self, center: f64, h: f64) -> f64 {
        let (g, t) = (self.width, self.cutoff);
        let c0 = center - PI * math::floor(center / PI);
        let first = math::floor((t - h - c0) / PI) as i64 + 1;
        // the tail approximation is off by O((g² + h²)/c²); start it far enough out
        let exact_windows = (math::ceil((1000.0 * g.max(h) - t) / PI) as i64).clamp(16, 1 << 20);
        let mut total = 0.0;
        for n in first..first + exact_windows {
            let mid = c0 + n as f64 * PI;
            let (lo, hi) = ((mid - h).max(t), mid + h);
            if hi > lo {
                total += lorentz_interval(g, lo, hi);
            }
        }
        // far windows: ∫ ≈ (2h·g/π)(c⁻² + (h² - g²)c⁻⁴), with
        // Σ (c0 + nπ)⁻² = ψ'(z)/π² and Σ (c0 + nπ)⁻⁴ = ζ(4, z)/π⁴
        let rest = (first + exact_windows) as f64 + c0 / PI;
        let pi2 = PI * PI;
        let lead = math::trigamma(rest) / pi2;
        let next = (h * h - g * g) * math::hurwitz_zeta4(rest) / (pi2 * pi2);
        total + 2.0 * h * g / PI * (lead + next)
    }
}

/// Untruncated Lorentz mass of `[lo, hi]` without cancellation.
fn lorentz_interval(width: f64, lo: f64, hi: f64) -> f64 {
    math::atan2(width * (hi - lo), width * width + lo * hi) / PI
}

/// Wrapped-Cauchy mass of the π-periodic window family, untruncated.
///
/// Doubling the angle maps the π-circle to the 2π-circle where the wrapped
/// Lorentz of width γ has CDF `(1/π)·atan(coth(γ)·tan(θ/2))`.
fn wrapped_window_mass(coth: f64, center: f64, h: f64) -> f64 {
    let c = math::wrap_pi(center + FRAC_PI_2) - FRAC_PI_2;
    let (u, v) = (2.0 * (c - h), 2.0 * (c + h));
    if u < -PI {
        arc_mass(coth, u + 2.0 * PI, PI) + arc_mass(coth, -PI, v)
    } else if v > PI {
        arc_mass(coth, u, PI) + arc_mass(coth, -PI, v - 2.0 * PI)
    } else {
        arc_mass(coth, u, v)
    }
}

/// Mass of the arc `[a, b] ⊂ [-π, π]` on the doubled circle.
fn arc_mass(k: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (sa, ca) = (math::sin(a / 2.0), math::cos(a / 2.0));
    let (sb, cb) = (math::sin(b / 2.0), math::cos(b / 2.0));
    math::atan2(k * math::sin((b - a) / 2.0), ca * cb + k * k * sa * sb) / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    /// Direct window-by-window summation, the independent route.
    fn brute_window_mass(p: &KickParams, center: f64, h: f64) -> f64 {
        let t = p.cutoff();
        let n_max = if t.is_finite() {
            ((t + center.abs()) / PI) as i64 + 2
        } else {
            2_000_000
        };
        (-n_max..=n_max)
            .map(|n| {
                let mid = center + n as f64 * PI;
                let (lo, hi) = ((mid - h).max(-t), (mid + h).min(t));
                if hi <= lo {
                    return 0.0;
                }
                // atan2 of the difference avoids cancellation in far windows
                let w = p.width();
                p.normalization() * math::atan2(w * (hi - lo), w * w + lo * hi) / PI
            })
            .sum()
    }

    #[test]
    fn normalization_examples() {
        assert!((normalization_constant(1.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((normalization_constant(1e-3, 1e-9).unwrap() - 1.0).abs() < 1e-6);
        assert!(normalization_constant(1e-3, 1e-6).unwrap() - 1.0 < 1e-2);
        assert!(normalization_constant(0.0, 1.0).is_err());
        assert!(normalization_constant(1.0, -1.0).is_err());
    }

    #[test]
    fn normalized_density_integrates_to_one() {
        // composite Simpson on the substitution x = w·tan(s), the quadrature oracle
        let mut rng = stream_rng(11, 0);
        for _ in 0..10 {
            let w = 10f64.powf(rng.random_range(-3.0..0.0));
            let a = 10f64.powf(rng.random_range(-3.0..0.5));
            let p = KickParams::new(w, Some(a)).unwrap();
            let s_max = math::atan(p.cutoff() / w);
            let n = 20_000;
            let step = 2.0 * s_max / n as f64;
            let f = |s: f64| {
                let x = (w * math::tan(s)).clamp(-p.cutoff(), p.cutoff());
                p.law().density(x) * w / (math::cos(s) * math::cos(s))
            };
            let mut acc = f(-s_max) + f(s_max);
            for i in 1..n {
                let s = -s_max + i as f64 * step;
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(s);
            }
            let integral = acc * step / 3.0;
            assert!((integral - 1.0).abs() < 1e-9, "w={w} a={a} integral={integral}");
        }
    }

    #[test]
    fn truncated_draws_respect_cutoff() {
        let p = KickParams::new(1e-3, Some(1e-3)).unwrap();
        let mut rng = stream_rng(1, 0);
        assert!((0..100_000).all(|_| sample_kick(&p, &mut rng).abs() <= 1000.0));
    }

    #[test]
    fn draws_are_seed_deterministic() {
        let p = KickParams::new(0.3, Some(0.1)).unwrap();
        let a: alloc::vec::Vec<f64> = (0..8)
            .map({
                let mut r = stream_rng(4, 2);
                move |_| sample_kick(&p, &mut r)
            })
            .collect();
        let b: alloc::vec::Vec<f64> = (0..8)
            .map({
                let mut r = stream_rng(4, 2);
                move |_| sample_kick(&p, &mut r)
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn cdf_matches_interval_mass() {
        let p = KickParams::new(0.2, Some(0.5)).unwrap();
        assert_eq!(p.law().cdf(-2.0), 0.0);
        assert_eq!(p.law().cdf(2.0), 1.0);
        assert!((p.law().cdf(0.0) - 0.5).abs() < 1e-15);
        let m = p.law().interval_mass(-0.1, 0.7);
        assert!((m - (p.law().cdf(0.7) - p.law().cdf(-0.1))).abs() < 1e-14);
    }

    #[test]
    fn window_mass_matches_direct_summation() {
        let cases = [
            (1e-3, Some(1e-3), 1e-3),
            (1e-1, Some(1e-1), 1e-1),
            (3e-2, Some(3e-2), 1e-2),
            (1.0, Some(1.0), 0.3),
            (0.5, Some(3.0), 0.7),
            (0.05, None, 0.05),
            (2.0, Some(0.01), 0.2),
        ];
        for (w, a, h) in cases {
            let p = KickParams::new(w, a).unwrap();
            for center in [0.0, 1e-4, 0.3, PI / 3.0, -PI / 6.0, 1.5, 2.9, 7.3, -11.0] {
                let fast = p.law().window_mass(center, h);
                let slow = brute_window_mass(&p, center, h);
                let tol = if a.is_some() { 1e-9 * slow + 1e-15 } else { 1e-6 * slow };
                assert!(
                    (fast - slow).abs() <= tol,
                    "w={w} a={a:?} h={h} c={center}: {fast} vs {slow}"
                );
            }
        }
    }

    #[test]
    fn full_circle_window_families_sum_to_one() {
        // windows at c and c + π/2 with half-width π/4 tile the line
        let p = KickParams::new(0.4, Some(0.2)).unwrap();
        let h = FRAC_PI_2 / 2.0 - 1e-15;
        let total = p.law().window_mass(0.1, h) + p.law().window_mass(0.1 + FRAC_PI_2, h);
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }
}
