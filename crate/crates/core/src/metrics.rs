//! Sampling-error metrics and post-selection constructions.
//!
//! Additive error is the plain sum `Σ_y |C(y) - D(y)|`, twice the total
//! variation distance. Multiplicative error is `max_y |C(y)/D(y) - 1|` over
//! the support of `D`; an outcome with `D(y) = 0 < C(y)` makes it undefined.

use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::bits::Bitstring;
use crate::distribution::OutcomeDistribution;
use crate::math;

/// Standard normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Widest distribution [`check_lemma_instance`] will enumerate.
pub const LEMMA_MAX_BITS: usize = 12;

/// Floating-point slack allowed when comparing a gap against the lemma bound.
pub const LEMMA_SLACK: f64 = 1e-12;

/// Metric preconditions that failed.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MetricsError {
    /// Operands have different widths.
    #[error("distributions have {left} and {right} bits")]
    DimensionMismatch {
        /// Width of the first operand.
        left: usize,
        /// Width of the second operand.
        right: usize,
    },
    /// Bit index or conditioning string does not fit the distribution.
    #[error("bit {k} or a {len}-bit condition does not fit {n_bits} bits")]
    BadCondition {
        /// Conditioned bit.
        k: usize,
        /// Length of `y'`.
        len: usize,
        /// Distribution width.
        n_bits: usize,
    },
    /// Both completions of `y'` have probability zero.
    #[error("conditioning on bit {k} given {y_prime} is undefined: zero denominator")]
    UndefinedConditioning {
        /// Conditioned bit.
        k: usize,
        /// Condition (bit `k` ignored).
        y_prime: Bitstring,
    },
    /// ε outside `[0, 1)`, or ε' negative.
    #[error("epsilon {0} out of range")]
    Epsilon(f64),
    /// Too many bits to enumerate.
    #[error("{0} bits exceed the enumeration cap of {LEMMA_MAX_BITS}")]
    TooWide(usize),
    /// Majority of an even number of draws.
    #[error("repetition count {0} must be odd and at least 1")]
    Repetitions(u32),
}

fn same_width(c: &OutcomeDistribution, d: &OutcomeDistribution) -> Result<(), MetricsError> {
    if c.n_bits() != d.n_bits() {
        return Err(MetricsError::DimensionMismatch {
            left: c.n_bits(),
            right: d.n_bits(),
        });
    }
    Ok(())
}

/// `Σ_y |C(y) - D(y)|`.
pub fn additive_error(c: &OutcomeDistribution, d: &OutcomeDistribution) -> Result<f64, MetricsError> {
    same_width(c, d)?;
    Ok(c.probs().iter().zip(d.probs()).map(|(a, b)| math::abs(a - b)).sum())
}

/// Multiplicative error, or the outcomes that make it undefined.
#[derive(Clone, Debug, PartialEq)]
pub enum Multiplicative {
    /// `max_y |C(y)/D(y) - 1|` over `D(y) > 0`.
    Defined(f64),
    /// Outcomes with `D(y) = 0 < C(y)`; no ε bounds the ratio there.
    Undefined(Vec<Bitstring>),
}

impl Multiplicative {
    /// The value when defined.
    pub fn value(&self) -> Option<f64> {
        match self {
            Multiplicative::Defined(v) => Some(*v),
            Multiplicative::Undefined(_) => None,
        }
    }

    /// True when defined and at most `eps`.
    pub fn within(&self, eps: f64) -> bool {
        self.value().is_some_and(|v| v <= eps)
    }
}

/// Multiplicative error of `C` against `D`. Outcomes outside both supports are ignored.
pub fn multiplicative_error(c: &OutcomeDistribution, d: &OutcomeDistribution) -> Result<Multiplicative, MetricsError> {
    same_width(c, d)?;
    let n = c.n_bits();
    let mut worst: f64 = 0.0;
    let mut violations = Vec::new();
    for (i, (&pc, &pd)) in c.probs().iter().zip(d.probs()).enumerate() {
        if pd > 0.0 {
            worst = worst.max(math::abs(pc / pd - 1.0));
        } else if pc > 0.0 {
            violations.push(Bitstring::from_index(i, n));
        }
    }
    Ok(if violations.is_empty() {
        Multiplicative::Defined(worst)
    } else {
        Multiplicative::Undefined(violations)
    })
}

/// Wilson score interval `(center, radius)` for `successes` of `n` at quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.5, 0.5);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2n = z * z / nf;
    let denom = 1.0 + z2n;
    let center = (p + z2n / 2.0) / denom;
    let radius = z / denom * math::sqrt(p * (1.0 - p) / nf + z2n / (4.0 * nf));
    (center, radius)
}

/// Per-outcome 95% Wilson radii for an empirical distribution, `None` when exact.
pub fn wilson_radii(c: &OutcomeDistribution) -> Option<Vec<f64>> {
    let n = c.n_samples()?;
    Some(
        c.probs()
            .iter()
            .map(|&p| wilson_interval(math::floor(p * n as f64 + 0.5) as u64, n, Z95).1)
            .collect(),
    )
}

/// Additive and multiplicative error of `C` against a reference `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    /// `Σ_y |C(y) - D(y)|`, in `[0, 2]`.
    pub additive: f64,
    /// Multiplicative error or its support violations.
    pub multiplicative: Multiplicative,
    /// Sample count behind `C` when empirical.
    pub n_samples: Option<u64>,
    /// Sum of the 95% Wilson radii over the union of supports, when empirical.
    pub additive_ci95: Option<f64>,
}

impl ErrorReport {
    /// Outcomes with `D(y) = 0 < C(y)`.
    pub fn support_violation(&self) -> &[Bitstring] {
        match &self.multiplicative {
            Multiplicative::Defined(_) => &[],
            Multiplicative::Undefined(v) => v,
        }
    }

    /// Verdict on `additive < eps` given the confidence radius.
    pub fn additive_verdict(&self, eps: f64) -> Verdict {
        verdict(self.additive, self.additive_ci95.unwrap_or(0.0), eps)
    }
}

/// Builds an [`ErrorReport`] for `C` (possibly empirical) against `D`.
pub fn error_report(c: &OutcomeDistribution, d: &OutcomeDistribution) -> Result<ErrorReport, MetricsError> {
    let additive = additive_error(c, d)?;
    let multiplicative = multiplicative_error(c, d)?;
    let additive_ci95 = wilson_radii(c).map(|radii| {
        radii
            .iter()
            .zip(c.probs().iter().zip(d.probs()))
            .filter(|(_, (&pc, &pd))| pc > 0.0 || pd > 0.0)
            .map(|(r, _)| r)
            .sum()
    });
    Ok(ErrorReport {
        additive,
        multiplicative,
        n_samples: c.n_samples(),
        additive_ci95,
    })
}

/// Three-valued comparison of an estimate against a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// `estimate + radius < eps`.
    Holds,
    /// `estimate - radius > eps`.
    Fails,
    /// The interval straddles `eps`.
    Inconclusive,
}

/// Classifies `estimate ± radius` against `eps`.
pub fn verdict(estimate: f64, radius: f64, eps: f64) -> Verdict {
    if estimate + radius < eps {
        Verdict::Holds
    } else if estimate - radius > eps {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    }
}

/// `D̄(k, b, y')`: probability that bit `k` is `b` given the other bits of `y'`.
///
/// `y_prime` has the full width; its bit `k` is ignored.
pub fn conditioned_probability(
    d: &OutcomeDistribution,
    k: usize,
    b: bool,
    y_prime: Bitstring,
) -> Result<f64, MetricsError> {
    let n = d.n_bits();
    if k >= n || y_prime.len() != n {
        return Err(MetricsError::BadCondition {
            k,
            len: y_prime.len(),
            n_bits: n,
        });
    }
    let p0 = d.prob(y_prime.with_bit(k, false));
    let p1 = d.prob(y_prime.with_bit(k, true));
    let denom = p0 + p1;
    if denom <= 0.0 {
        return Err(MetricsError::UndefinedConditioning {
            k,
            y_prime: y_prime.with_bit(k, false),
        });
    }
    Ok(if b { p1 } else { p0 } / denom)
}

/// `ε' = 2ε/(1 - ε)`, the conditional bound implied by multiplicative error ε.
pub fn lemma_epsilon_prime(eps: f64) -> Result<f64, MetricsError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(MetricsError::Epsilon(eps));
    }
    Ok(2.0 * eps / (1.0 - eps))
}

/// Inverse of [`lemma_epsilon_prime`]: `ε = ε'/(2 + ε')`.
pub fn lemma_epsilon(eps_prime: f64) -> Result<f64, MetricsError> {
    if eps_prime < 0.0 || !eps_prime.is_finite() {
        return Err(MetricsError::Epsilon(eps_prime));
    }
    Ok(eps_prime / (2.0 + eps_prime))
}

/// A conditioning triple and both conditioned probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaWitness {
    /// Conditioned bit.
    pub k: usize,
    /// Conditioned value.
    pub b: bool,
    /// Other bits (bit `k` cleared).
    pub y_prime: Bitstring,
    /// `C̄(k, b, y')`.
    pub c_bar: f64,
    /// `D̄(k, b, y')`.
    pub d_bar: f64,
}

impl LemmaWitness {
    /// `|C̄ - D̄|`.
    pub fn gap(&self) -> f64 {
        math::abs(self.c_bar - self.d_bar)
    }
}

/// Outcome of [`check_lemma_instance`].
#[derive(Clone, Debug, PartialEq)]
pub enum LemmaVerdict {
    /// `C` is not within multiplicative error ε of `D`.
    PremiseFailed(Multiplicative),
    /// Every defined conditioning satisfies `|C̄ - D̄| ≤ ε'`.
    Holds {
        /// ε'.
        bound: f64,
        /// Triple with the largest gap, if any conditioning is defined.
        worst: Option<LemmaWitness>,
        /// `ε' - largest gap`.
        margin: f64,
    },
    /// A triple whose gap exceeds ε'.
    Counterexample {
        /// ε'.
        bound: f64,
        /// The offending triple.
        witness: LemmaWitness,
    },
}

/// Checks that multiplicative error ε bounds every conditioned probability gap by `2ε/(1 - ε)`.
///
/// The premise is checked first. Then every `(k, b, y')` with defined
/// conditioning on both sides is enumerated.
pub fn check_lemma_instance(
    d: &OutcomeDistribution,
    c: &OutcomeDistribution,
    eps: f64,
) -> Result<LemmaVerdict, MetricsError> {
    same_width(c, d)?;
    let n = d.n_bits();
    if n > LEMMA_MAX_BITS {
        return Err(MetricsError::TooWide(n));
    }
    let bound = lemma_epsilon_prime(eps)?;
    let premise = multiplicative_error(c, d)?;
    if !premise.within(eps) {
        return Ok(LemmaVerdict::PremiseFailed(premise));
    }
    let mut worst: Option<LemmaWitness> = None;
    for k in 0..n {
        for idx in 0..1usize << n {
            let y_prime = Bitstring::from_index(idx, n);
            if y_prime.bit(k) {
                continue;
            }
            for b in [false, true] {
                let (Ok(c_bar), Ok(d_bar)) = (
                    conditioned_probability(c, k, b, y_prime),
                    conditioned_probability(d, k, b, y_prime),
                ) else {
                    continue;
                };
                let w = LemmaWitness {
                    k,
                    b,
                    y_prime,
                    c_bar,
                    d_bar,
                };
                if w.gap() > bound + LEMMA_SLACK {
                    return Ok(LemmaVerdict::Counterexample { bound, witness: w });
                }
                if worst.is_none_or(|cur| w.gap() > cur.gap()) {
                    worst = Some(w);
                }
            }
        }
    }
    let margin = bound - worst.map_or(0.0, |w| w.gap());
    Ok(LemmaVerdict::Holds { bound, worst, margin })
}

/// A bit draw that may be rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitOutcome {
    /// Accepted bit.
    Bit(bool),
    /// Rejected draw.
    Failed,
}

/// Source of bit draws.
pub trait BitSampler {
    /// One draw.
    fn draw(&mut self, rng: &mut dyn RngCore) -> BitOutcome;
}

impl<F: FnMut(&mut dyn RngCore) -> BitOutcome> BitSampler for F {
    fn draw(&mut self, rng: &mut dyn RngCore) -> BitOutcome {
        self(rng)
    }
}

/// A decider sample with its own validity flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PostSelectedBitSample {
    /// Candidate answer.
    pub y_sample: bool,
    /// Whether the run counts.
    pub y_valid: bool,
}

/// Source of post-selected decider samples; `None` means FAILED.
pub trait PostSelectedSampler {
    /// One draw.
    fn draw(&mut self, rng: &mut dyn RngCore) -> Option<PostSelectedBitSample>;
}

impl<F: FnMut(&mut dyn RngCore) -> Option<PostSelectedBitSample>> PostSelectedSampler for F {
    fn draw(&mut self, rng: &mut dyn RngCore) -> Option<PostSelectedBitSample> {
        self(rng)
    }
}

/// Majority vote over `m` independent draws of an inner sampler.
#[derive(Clone, Debug)]
pub struct MajorityAmplified<S> {
    inner: S,
    m: u32,
}

impl<S: BitSampler> BitSampler for MajorityAmplified<S> {
    fn draw(&mut self, rng: &mut dyn RngCore) -> BitOutcome {
        let mut ones = 0;
        for _ in 0..self.m {
            match self.inner.draw(rng) {
                BitOutcome::Bit(b) => ones += u32::from(b),
                BitOutcome::Failed => return BitOutcome::Failed,
            }
        }
        BitOutcome::Bit(2 * ones > self.m)
    }
}

/// Wraps `decider` so each draw is the majority of `m` draws; any failed sub-draw fails the whole.
pub fn majority_amplify<S: BitSampler>(decider: S, m: u32) -> Result<MajorityAmplified<S>, MetricsError> {
    if m % 2 == 0 {
        return Err(MetricsError::Repetitions(m));
    }
    Ok(MajorityAmplified { inner: decider, m })
}

/// Probability that a majority of `m` independent trials err, each with probability `p`.
pub fn majority_error_probability(p: f64, m: u32) -> f64 {
    let ln_p = math::ln(p);
    let ln_q = math::ln_1p(-p);
    let mf = m as f64;
    (m / 2 + 1..=m)
        .map(|k| {
            let kf = k as f64;
            let ln_choose = math::lgamma(mf + 1.0) - math::lgamma(kf + 1.0) - math::lgamma(mf - kf + 1.0);
            math::exp(ln_choose + kf * ln_p + (mf - kf) * ln_q)
        })
        .sum()
}

/// Decider derived from a post-selected sampler.
#[derive(Clone, Debug)]
pub struct PostSelectDecider<B> {
    inner: B,
}

impl<B: PostSelectedSampler> BitSampler for PostSelectDecider<B> {
    fn draw(&mut self, rng: &mut dyn RngCore) -> BitOutcome {
        match self.inner.draw(rng) {
            Some(PostSelectedBitSample {
                y_sample,
                y_valid: true,
            }) => BitOutcome::Bit(y_sample),
            _ => BitOutcome::Failed,
        }
    }
}

/// Turns FAILED and `y_valid = 0` into FAILED and passes `y_sample` through otherwise.
pub fn post_select_decider<B: PostSelectedSampler>(b: B) -> PostSelectDecider<B> {
    PostSelectDecider { inner: b }
}

/// Bernoulli bit sampler that answers wrongly with probability `error`; the correct answer is `truth`.
pub fn noisy_decider(truth: bool, error: f64) -> impl BitSampler + Clone {
    move |rng: &mut dyn RngCore| BitOutcome::Bit(if rng.random::<f64>() < error { !truth } else { truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use alloc::vec;

    fn dist(n: usize, entries: &[(&str, f64)]) -> OutcomeDistribution {
        OutcomeDistribution::from_sparse(n, entries.iter().map(|(s, p)| (s.parse::<Bitstring>().unwrap(), *p))).unwrap()
    }

    #[test]
    fn additive_examples() {
        let c = dist(1, &[("0", 0.3), ("1", 0.7)]);
        let d = dist(1, &[("0", 0.25), ("1", 0.75)]);
        assert!((additive_error(&c, &d).unwrap() - 0.10).abs() < 1e-15);
        assert_eq!(additive_error(&c, &c).unwrap(), 0.0);
        assert_eq!(
            additive_error(&dist(1, &[("0", 1.0)]), &dist(1, &[("1", 1.0)])).unwrap(),
            2.0
        );
        assert!(matches!(
            additive_error(&c, &dist(2, &[("00", 1.0)])),
            Err(MetricsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn multiplicative_examples() {
        let c = dist(1, &[("0", 0.275), ("1", 0.725)]);
        let d = dist(1, &[("0", 0.25), ("1", 0.75)]);
        assert!((multiplicative_error(&c, &d).unwrap().value().unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(multiplicative_error(&d, &d).unwrap(), Multiplicative::Defined(0.0));
        let d = dist(1, &[("0", 1.0)]);
        let c = dist(1, &[("0", 0.99), ("1", 0.01)]);
        assert_eq!(
            multiplicative_error(&c, &d).unwrap(),
            Multiplicative::Undefined(vec!["1".parse().unwrap()])
        );
    }

    #[test]
    fn worked_example_conditioning() {
        // bit 0 is y_sample, bit 1 is y_valid
        let d = dist(2, &[("01", 0.02), ("11", 0.06), ("00", 0.5), ("10", 0.42)]);
        let p = conditioned_probability(&d, 0, true, "01".parse().unwrap()).unwrap();
        assert!((p - 0.75).abs() < 1e-12);
        let uniform = OutcomeDistribution::exact(2, vec![0.25; 4]).unwrap();
        assert_eq!(
            conditioned_probability(&uniform, 1, false, "10".parse().unwrap()).unwrap(),
            0.5
        );
        let point = dist(2, &[("00", 1.0)]);
        assert!(matches!(
            conditioned_probability(&point, 0, true, "01".parse().unwrap()),
            Err(MetricsError::UndefinedConditioning { k: 0, .. })
        ));
    }

    #[test]
    fn epsilon_prime() {
        assert_eq!(lemma_epsilon_prime(0.0).unwrap(), 0.0);
        assert!((lemma_epsilon_prime(0.1).unwrap() - 0.2 / 0.9).abs() < 1e-15);
        assert!(lemma_epsilon_prime(1.0).is_err());
        assert!((lemma_epsilon(lemma_epsilon_prime(0.37).unwrap()).unwrap() - 0.37).abs() < 1e-15);
    }

    #[test]
    fn lemma_identical_holds_with_full_margin() {
        let d = dist(2, &[("00", 0.1), ("01", 0.2), ("10", 0.3), ("11", 0.4)]);
        match check_lemma_instance(&d, &d, 0.1).unwrap() {
            LemmaVerdict::Holds { margin, .. } => assert!((margin - 0.2 / 0.9).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lemma_premise_failure() {
        let d = dist(1, &[("0", 0.5), ("1", 0.5)]);
        let c = dist(1, &[("0", 0.6), ("1", 0.4)]);
        assert!(matches!(
            check_lemma_instance(&d, &c, 0.1).unwrap(),
            LemmaVerdict::PremiseFailed(_)
        ));
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (center, radius) = wilson_interval(30, 100, Z95);
        assert!(center - radius < 0.3 && 0.3 < center + radius);
        let (_, r0) = wilson_interval(0, 100, Z95);
        assert!(r0 > 0.0);
    }

    #[test]
    fn verdicts() {
        assert_eq!(verdict(0.01, 0.005, 0.05), Verdict::Holds);
        assert_eq!(verdict(0.2, 0.01, 0.05), Verdict::Fails);
        assert_eq!(verdict(0.049, 0.01, 0.05), Verdict::Inconclusive);
    }

    #[test]
    fn majority_rejects_even_m() {
        assert_eq!(
            majority_amplify(noisy_decider(true, 0.1), 4).err(),
            Some(MetricsError::Repetitions(4))
        );
        assert!(majority_amplify(noisy_decider(true, 0.1), 0).is_err());
    }

    #[test]
    fn majority_propagates_failure() {
        let flaky = |rng: &mut dyn RngCore| {
            if rng.random::<bool>() {
                BitOutcome::Bit(true)
            } else {
                BitOutcome::Failed
            }
        };
        let mut amp = majority_amplify(flaky, 3).unwrap();
        let mut rng = stream_rng(5, 0);
        let n = 200_000;
        let failed = (0..n).filter(|_| amp.draw(&mut rng) == BitOutcome::Failed).count();
        let rate = failed as f64 / n as f64;
        let sigma = (0.875 * 0.125 / n as f64).sqrt();
        assert!((rate - 0.875).abs() < 4.0 * sigma, "{rate}");
    }

    #[test]
    fn majority_error_single_trial() {
        assert!((majority_error_probability(1.0 / 3.0, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((majority_error_probability(1.0 / 3.0, 3) - 7.0 / 27.0).abs() < 1e-14);
    }

    #[test]
    fn post_select_always_valid() {
        let b = |_: &mut dyn RngCore| {
            Some(PostSelectedBitSample {
                y_sample: true,
                y_valid: true,
            })
        };
        let mut m = post_select_decider(b);
        let mut rng = stream_rng(0, 0);
        assert!((0..100).all(|_| m.draw(&mut rng) == BitOutcome::Bit(true)));
        let invalid = |_: &mut dyn RngCore| {
            Some(PostSelectedBitSample {
                y_sample: true,
                y_valid: false,
            })
        };
        assert_eq!(post_select_decider(invalid).draw(&mut rng), BitOutcome::Failed);
        assert_eq!(
            post_select_decider(|_: &mut dyn RngCore| None).draw(&mut rng),
            BitOutcome::Failed
        );
    }
}
