use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore};
use retrolab_core::bits::Bitstring;
use retrolab_core::metrics::*;
use retrolab_core::rng::stream_rng;
use retrolab_core::OutcomeDistribution;

fn binomial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// `P(Bin(m, 1/3) ≥ (m+1)/2)` exactly.
fn exact_tail(m: u32) -> BigRational {
    let mut num = BigInt::zero();
    for k in (m / 2 + 1)..=m {
        num += binomial(m, k) * BigInt::from(2).pow(m - k);
    }
    BigRational::new(num, BigInt::from(3).pow(m))
}

#[test]
fn binomial_tail_matches_exact_arithmetic() {
    let exact = exact_tail(101).to_f64().unwrap();
    assert!((exact - 2.724_021e-4).abs() < 1e-9, "{exact}");
    let fast = majority_error_probability(1.0 / 3.0, 101);
    assert!((fast / exact - 1.0).abs() < 1e-10, "{fast} vs {exact}");
}

#[test]
fn amplification_is_monotone() {
    let mut prev = BigRational::one();
    for m in (1..=101).step_by(2) {
        let t = exact_tail(m);
        assert!(t < prev, "m = {m}");
        prev = t;
    }
}

#[test]
fn amplified_error_matches_tail_empirically() {
    let n = 200_000u64;
    let mut amp = majority_amplify(noisy_decider(true, 1.0 / 3.0), 101).unwrap();
    let mut rng = stream_rng(77, 0);
    let wrong = (0..n).filter(|_| amp.draw(&mut rng) == BitOutcome::Bit(false)).count() as f64;
    let p = exact_tail(101).to_f64().unwrap();
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((wrong / n as f64 - p).abs() < 3.0 * sigma);
}

#[test]
fn worked_example_is_three_quarters() {
    let (valid0, valid1) = (
        BigRational::new(2.into(), 100.into()),
        BigRational::new(6.into(), 100.into()),
    );
    let exact = &valid1 / (&valid0 + &valid1);
    assert_eq!(exact, BigRational::new(3.into(), 4.into()));
    let d = OutcomeDistribution::from_sparse(
        2,
        [("01", 0.02), ("11", 0.06), ("00", 0.46), ("10", 0.46)].map(|(s, p)| (s.parse::<Bitstring>().unwrap(), p)),
    )
    .unwrap();
    let p = conditioned_probability(&d, 0, true, "01".parse().unwrap()).unwrap();
    assert!((p - exact.to_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn post_selected_decider_matches_enumeration() {
    // joint (y_sample, y_valid) law: (0,1) 2%, (1,1) 6%, invalid 92%
    let b = |rng: &mut dyn RngCore| {
        let u: f64 = rng.random();
        Some(if u < 0.02 {
            PostSelectedBitSample {
                y_sample: false,
                y_valid: true,
            }
        } else if u < 0.08 {
            PostSelectedBitSample {
                y_sample: true,
                y_valid: true,
            }
        } else {
            PostSelectedBitSample {
                y_sample: rng.random(),
                y_valid: false,
            }
        })
    };
    let mut m = post_select_decider(b);
    let mut rng = stream_rng(31, 0);
    let (mut ones, mut valid) = (0u64, 0u64);
    for _ in 0..1_000_000 {
        if let BitOutcome::Bit(bit) = m.draw(&mut rng) {
            valid += 1;
            ones += u64::from(bit);
        }
    }
    let p = ones as f64 / valid as f64;
    let sigma = (0.75 * 0.25 / valid as f64).sqrt();
    assert!((p - 0.75).abs() < 3.0 * sigma, "{p}");
    let rate = valid as f64 / 1e6;
    assert!((rate - 0.08).abs() < 3.0 * (0.08 * 0.92 / 1e6f64).sqrt());
}

fn random_pair(rng: &mut impl Rng, n: usize, eps: f64) -> Option<(OutcomeDistribution, OutcomeDistribution)> {
    let raw: Vec<f64> = (0..1 << n)
        .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random() })
        .collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return None;
    }
    let d: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let t = eps / (2.0 + eps);
    let c_raw: Vec<f64> = d.iter().map(|p| p * (1.0 + t * rng.random_range(-1.0..1.0))).collect();
    let c_total: f64 = c_raw.iter().sum();
    Some((
        OutcomeDistribution::exact(n, d).unwrap(),
        OutcomeDistribution::exact(n, c_raw.iter().map(|x| x / c_total).collect()).unwrap(),
    ))
}

#[test]
fn lemma_holds_on_random_premise_pairs() {
    let mut rng = stream_rng(1234, 0);
    let mut checked = 0;
    while checked < 1000 {
        let n = rng.random_range(1..=3);
        let Some((d, c)) = random_pair(&mut rng, n, 0.05) else {
            continue;
        };
        match check_lemma_instance(&d, &c, 0.05).unwrap() {
            LemmaVerdict::Holds { .. } => checked += 1,
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn adversarial_pair_is_never_a_false_pass() {
    // pushing one outcome beyond ε breaks the premise
    let d = OutcomeDistribution::exact(2, vec![0.25; 4]).unwrap();
    let c = OutcomeDistribution::exact(2, vec![0.35, 0.25, 0.2, 0.2]).unwrap();
    assert!(matches!(
        check_lemma_instance(&d, &c, 0.05).unwrap(),
        LemmaVerdict::PremiseFailed(_)
    ));
    // a support violation also fails the premise
    let d = OutcomeDistribution::exact(1, vec![1.0, 0.0]).unwrap();
    let c = OutcomeDistribution::exact(1, vec![0.99, 0.01]).unwrap();
    assert!(matches!(
        check_lemma_instance(&d, &c, 0.5).unwrap(),
        LemmaVerdict::PremiseFailed(Multiplicative::Undefined(_))
    ));
}

#[test]
fn lemma_enumeration_is_capped() {
    let d = OutcomeDistribution::exact(13, vec![1.0 / 8192.0; 8192]).unwrap();
    assert_eq!(check_lemma_instance(&d, &d, 0.1), Err(MetricsError::TooWide(13)));
}
