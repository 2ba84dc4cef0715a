use retrolab_core::circuits::{BuildOptions, CircuitSpec, Deltas};
use retrolab_core::metrics::{additive_error, error_report, wilson_radii};
use retrolab_core::samplers::*;
use retrolab_core::OutcomeDistribution;
use std::f64::consts::{FRAC_PI_2, PI};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn naive() -> RejectionConfig {
    RejectionConfig {
        strategy: Strategy::Naive,
        workers: 1,
        max_trials: None,
    }
}

fn collapsed() -> RejectionConfig {
    RejectionConfig {
        strategy: Strategy::Collapsed,
        workers: 1,
        max_trials: None,
    }
}

fn ci(d: &OutcomeDistribution) -> f64 {
    wilson_radii(d).unwrap().iter().sum()
}

#[test]
fn rejection_reproduces_malus_law() {
    let model = CircuitSpec::malus(false, PI / 3.0).hv(Deltas::equal(1e-3)).unwrap();
    let r = run_rejection(&model, 4, 100_000, None).unwrap();
    assert!((r.distribution.probs()[0] - 0.25).abs() < 0.02);
    assert_eq!(r.bound_violations, 0);
}

#[test]
fn rejection_reproduces_perfect_correlation() {
    let model = CircuitSpec::epr(0.0, 0.0).hv(Deltas::equal(1e-3)).unwrap();
    let r = run_rejection(&model, 4, 100_000, None).unwrap();
    assert!(r.distribution.prob_all_equal() > 0.98);
    let sum: u64 = r.counts.iter().sum();
    assert_eq!(sum, r.accepted);
    assert_eq!(r.distribution.probs().iter().sum::<f64>(), 1.0);
}

#[test]
fn halving_the_window_halves_acceptance() {
    // broad kicks make the kick density nearly flat across each window
    let (width, alpha, theta): (f64, f64, f64) = (1.0, 0.1, PI / 3.0);
    let cutoff = 1.0 / alpha;
    let mass = 2.0 * (cutoff / width).atan() / PI;
    let f = |x: f64| width / (PI * (width * width + x * x)) / mass;
    let oracle = |h: f64| {
        let k_max = (cutoff / FRAC_PI_2).ceil() as i64 + 2;
        (-k_max..=k_max)
            .map(|k| {
                let c = theta + k as f64 * FRAC_PI_2;
                let (lo, hi) = ((c - h).max(-cutoff), (c + h).min(cutoff));
                if hi > lo {
                    simpson(f, lo, hi, 200)
                } else {
                    0.0
                }
            })
            .sum::<f64>()
    };
    let spec = CircuitSpec::malus(false, theta);
    let rate = |h: f64| {
        let model = spec
            .hv(Deltas {
                phi_l: width,
                phi_m: h,
                alpha,
            })
            .unwrap();
        run_rejection_with(&Serial, &model, 17, 100_000, &naive()).unwrap()
    };
    let (wide, narrow) = (rate(PI / 8.0), rate(PI / 16.0));
    let ratio = wide.acceptance_rate / narrow.acceptance_rate;
    let expected = oracle(PI / 8.0) / oracle(PI / 16.0);
    assert!((1.6..=2.4).contains(&ratio), "{ratio}");
    let rel_sigma = (wide.acceptance_estimate.stderr / wide.acceptance_estimate.mean)
        .hypot(narrow.acceptance_estimate.stderr / narrow.acceptance_estimate.mean);
    assert!(
        (ratio / expected - 1.0).abs() < 4.0 * rel_sigma,
        "{ratio} vs {expected}"
    );
    assert!((wide.acceptance_estimate.mean - oracle(PI / 8.0)).abs() < 4.0 * wide.acceptance_estimate.stderr);
}

#[test]
fn collapsed_and_naive_agree_at_coarse_deltas() {
    let cases = [
        (CircuitSpec::malus(false, PI / 3.0), 20_000),
        (CircuitSpec::epr(0.0, PI / 8.0), 20_000),
        (CircuitSpec::epr(0.3, 1.0), 20_000),
        (CircuitSpec::double_bell_cnot([0.0; 4]), 4_000),
    ];
    for (spec, n) in cases {
        let model = spec.hv(Deltas::equal(0.05)).unwrap();
        let a = run_rejection_with(&Serial, &model, 1, n, &collapsed()).unwrap();
        let b = run_rejection_with(&Serial, &model, 2, n, &naive()).unwrap();
        let gap = additive_error(&a.distribution, &b.distribution).unwrap();
        let noise = ci(&a.distribution).hypot(ci(&b.distribution));
        assert!(gap < 1.5 * noise, "{:?}: gap {gap} noise {noise}", spec.id);
        let (pa, pb) = (a.acceptance_estimate, b.acceptance_estimate);
        assert!(
            (pa.mean - pb.mean).abs() < 4.0 * pa.stderr.hypot(pb.stderr),
            "{:?}: {pa:?} vs {pb:?}",
            spec.id
        );
        assert_eq!(a.bound_violations, 0);
    }
}

#[test]
fn collapsed_bound_holds_across_settings() {
    let specs = [
        CircuitSpec::malus(true, 0.4),
        CircuitSpec::epr(0.0, PI / 4.0),
        CircuitSpec::epr(1.0, 2.5),
        CircuitSpec::double_bell_cnot([0.0, 0.0, PI / 8.0, 0.0]),
        CircuitSpec::double_bell_cnot([0.3, 0.1, 0.7, 1.2]),
        CircuitSpec::epr(0.0, 0.5).with_options(BuildOptions {
            drop_second_kick: true,
            ..Default::default()
        }),
        CircuitSpec::malus(false, 0.9).with_options(BuildOptions {
            extra_kick_layers: 1,
            ..Default::default()
        }),
    ];
    for spec in specs {
        for d in [1e-1, 1e-2, 1e-3] {
            let model = spec.hv(Deltas::equal(d)).unwrap();
            let cfg = RejectionConfig {
                max_trials: Some(200_000),
                ..collapsed()
            };
            match run_rejection_with(&Serial, &model, 3, 2_000, &cfg) {
                Ok(r) => assert_eq!(r.bound_violations, 0, "{spec:?} at {d}"),
                Err(SamplerError::Starvation { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
}

#[test]
fn runs_are_deterministic_per_seed_and_workers() {
    let model = CircuitSpec::epr(0.0, 0.4).hv(Deltas::equal(1e-2)).unwrap();
    for workers in [1, 3] {
        let cfg = RejectionConfig { workers, ..collapsed() };
        let a = run_rejection_with(&Serial, &model, 9, 5_000, &cfg).unwrap();
        let b = run_rejection_with(&Serial, &model, 9, 5_000, &cfg).unwrap();
        assert_eq!(a, b);
    }
    let causal = CircuitSpec::epr(0.0, 0.4).causal_hv(1e-2, 1e-2).unwrap();
    assert_eq!(
        run_sequential(&causal, 5, 1000).unwrap(),
        run_sequential(&causal, 5, 1000).unwrap()
    );
}

#[test]
fn sequential_never_rejects() {
    for spec in [
        CircuitSpec::malus(true, 0.3),
        CircuitSpec::epr(0.1, 0.9),
        CircuitSpec::double_bell_cnot([0.2; 4]),
    ] {
        let r = run_sequential(&spec.causal_hv(0.05, 0.05).unwrap(), 0, 10_000).unwrap();
        assert_eq!((r.accepted, r.rejected, r.acceptance_rate), (10_000, 0, 1.0));
    }
}

#[test]
fn causal_variant_misses_the_quantum_correlation() {
    // with a shared uniform angle and vanishing kicks, the two unconstrained readouts
    // agree unless the angle falls in an arc of length |θ1 - θ2| out of π/2
    let spec = CircuitSpec::epr(0.0, PI / 8.0);
    let r = run_sequential(&spec.causal_hv(1e-3, 1e-3).unwrap(), 11, 100_000).unwrap();
    let same = 1.0 - (PI / 8.0) / FRAC_PI_2;
    assert!((r.distribution.prob_all_equal() - same).abs() < 0.01);
    let exact = exact_limit_distribution(&spec).unwrap();
    assert!(additive_error(&r.distribution, &exact).unwrap() > 0.05);
}

#[test]
fn retro_causal_variant_recovers_it() {
    let spec = CircuitSpec::epr(0.0, PI / 8.0);
    let r = run_rejection(&spec.hv(Deltas::equal(1e-3)).unwrap(), 11, 100_000, None).unwrap();
    let exact = exact_limit_distribution(&spec).unwrap();
    assert!(error_report(&r.distribution, &exact).unwrap().additive < 0.05);
}

#[test]
fn extra_kicks_do_not_change_the_outcome() {
    let d = Deltas::equal(0.05);
    let pairs = [
        (
            CircuitSpec::malus(false, PI / 3.0),
            BuildOptions {
                extra_kick_layers: 1,
                ..Default::default()
            },
        ),
        (
            CircuitSpec::epr(0.0, PI / 8.0),
            BuildOptions {
                drop_second_kick: true,
                ..Default::default()
            },
        ),
    ];
    for (spec, options) in pairs {
        let exact = exact_limit_distribution(&spec).unwrap();
        let base = run_rejection(&spec.hv(d).unwrap(), 21, 50_000, None).unwrap();
        let varied = run_rejection(&spec.clone().with_options(options).hv(d).unwrap(), 22, 50_000, None).unwrap();
        let (e1, e2) = (
            error_report(&base.distribution, &exact).unwrap(),
            error_report(&varied.distribution, &exact).unwrap(),
        );
        let combined = e1.additive_ci95.unwrap().hypot(e2.additive_ci95.unwrap());
        assert!(
            (e1.additive - e2.additive).abs() < 3.0 * combined,
            "{:?}: {} vs {}",
            spec.id,
            e1.additive,
            e2.additive
        );
    }
}

#[test]
fn sweep_reports_rows_and_in_row_starvation() {
    let spec = CircuitSpec::malus(false, PI / 3.0);
    let schedule = [Deltas::equal(0.1), Deltas::equal(0.03), Deltas::equal(0.01)];
    let rows = convergence_sweep(&spec, &schedule, 40, 20_000, &collapsed()).unwrap();
    assert_eq!(rows.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![40, 41, 42]);
    let first = rows[0].result.as_ref().unwrap();
    let last = rows[2].result.as_ref().unwrap();
    assert!(first.additive_error > last.additive_error);

    let starving = RejectionConfig {
        max_trials: Some(10),
        ..naive()
    };
    let rows = convergence_sweep(&spec, &schedule, 40, 20_000, &starving).unwrap();
    assert!(rows
        .iter()
        .any(|r| matches!(r.result, Err(SamplerError::Starvation { .. }))));
    assert_eq!(rows.len(), 3);
    assert!(convergence_sweep(&spec, &[], 0, 10, &naive()).is_err());
}

#[test]
fn cnot_trick_matches_at_zero_angles() {
    let spec = CircuitSpec::double_bell_cnot([0.0; 4]);
    let r = run_rejection(&spec.hv(Deltas::equal(1e-3)).unwrap(), 8, 100_000, None).unwrap();
    let exact = exact_limit_distribution(&spec).unwrap();
    assert!(additive_error(&r.distribution, &exact).unwrap() < 0.05);
}
