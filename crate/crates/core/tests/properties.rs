use proptest::prelude::*;
use rand::Rng;
use retrolab_core::bits::Bitstring;
use retrolab_core::hvmodel::{apply_layer, DeterministicGate, HVState, InitSpec, KickParams, Layer};
use retrolab_core::metrics::{
    additive_error, check_lemma_instance, conditioned_probability, lemma_epsilon, lemma_epsilon_prime,
    multiplicative_error, LemmaVerdict,
};
use retrolab_core::qsim::{outcome_distribution, prepare, GateOp, QuantumCircuit, Statevector};
use retrolab_core::rng::stream_rng;
use retrolab_core::OutcomeDistribution;
use std::f64::consts::PI;

fn normalized(weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn distribution(n_bits: usize) -> impl Strategy<Value = OutcomeDistribution> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0..1.0f64], 1 << n_bits)
        .prop_filter("non-empty support", |w| w.iter().sum::<f64>() > 1e-6)
        .prop_map(move |w| OutcomeDistribution::exact(n_bits, normalized(w)).unwrap())
}

fn gate(n: usize) -> impl Strategy<Value = GateOp> {
    let q = 0..n;
    prop_oneof![
        (q.clone(), -7.0..7.0f64).prop_map(|(qubit, angle)| GateOp::Ry { qubit, angle }),
        q.clone().prop_map(|qubit| GateOp::H { qubit }),
        q.clone().prop_map(|qubit| GateOp::X { qubit }),
        (q.clone(), q.clone())
            .prop_filter("distinct", |(a, b)| a != b)
            .prop_map(|(control, target)| GateOp::Cnot { control, target }),
        (q.clone(), q)
            .prop_filter("distinct", |(a, b)| a != b)
            .prop_map(|(qubit_a, qubit_b)| GateOp::BellPrep { qubit_a, qubit_b }),
    ]
}

fn layer(n: usize) -> impl Strategy<Value = Layer> {
    let w = 0..n;
    prop_oneof![
        prop::collection::vec(
            (
                w.clone(),
                prop_oneof![
                    (-10.0..10.0f64).prop_map(InitSpec::Fixed),
                    (0u32..3).prop_map(InitSpec::SharedRandom)
                ]
            ),
            1..4
        )
        .prop_map(Layer::Init),
        (w.clone(), w.clone())
            .prop_filter("distinct", |(a, b)| a != b)
            .prop_map(|(control, target)| Layer::Gate(DeterministicGate::AddControlToTarget { control, target })),
        (w.clone(), -20.0..20.0f64)
            .prop_map(|(wire, angle)| Layer::Gate(DeterministicGate::AddConstant { wire, angle })),
        (prop::collection::vec(w, 1..4), 1e-3..2.0f64, 0.0..2.0f64).prop_map(|(wires, width, a)| Layer::Kick {
            wires,
            params: KickParams::new(width, Some(a)).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn statevector_norm_is_preserved(gates in prop::collection::vec(gate(4), 0..30), input in 0usize..16) {
        let circuit = QuantumCircuit::with_gates(4, gates).unwrap();
        let state = prepare(&circuit, Bitstring::from_index(input, 4)).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        let d = outcome_distribution(&circuit, Bitstring::from_index(input, 4)).unwrap();
        prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_prep_is_h_then_cnot(prefix in prop::collection::vec(gate(3), 0..10), a in 0usize..3, b in 0usize..3) {
        prop_assume!(a != b);
        let mut s1 = prepare(&QuantumCircuit::with_gates(3, prefix.clone()).unwrap(), Bitstring::zeros(3)).unwrap();
        let mut s2: Statevector = s1.clone();
        s1.apply(&GateOp::BellPrep { qubit_a: a, qubit_b: b });
        s2.apply(&GateOp::H { qubit: a });
        s2.apply(&GateOp::Cnot { control: a, target: b });
        for (x, y) in s1.amplitudes().iter().zip(s2.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn angles_stay_wrapped(layers in prop::collection::vec(layer(3), 0..20), seed: u64) {
        let mut rng = stream_rng(seed, 0);
        let mut state = HVState::zeros(3);
        for l in &layers {
            state = apply_layer(&state, l, &mut rng).unwrap();
            prop_assert!(state.angles().iter().all(|a| (0.0..PI).contains(a)));
        }
    }

    #[test]
    fn kicks_are_symmetric_and_bounded(width in 1e-3..1.0f64, a in 1e-3..3.0f64, seed: u64) {
        let p = KickParams::new(width, Some(a)).unwrap();
        let mut rng = stream_rng(seed, 0);
        let draws: Vec<f64> = (0..2000).map(|_| p.law().sample(&mut rng)).collect();
        prop_assert!(draws.iter().all(|x| x.abs() <= 1.0 / a));
        prop_assert!((p.law().cdf(0.7 * width) + p.law().cdf(-0.7 * width) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn additive_error_is_a_metric(c in distribution(3), d in distribution(3), e in distribution(3)) {
        let cd = additive_error(&c, &d).unwrap();
        prop_assert!((0.0..=2.0 + 1e-12).contains(&cd));
        prop_assert!((cd - additive_error(&d, &c).unwrap()).abs() < 1e-15);
        prop_assert_eq!(additive_error(&c, &c).unwrap(), 0.0);
        prop_assert!(cd <= additive_error(&c, &e).unwrap() + additive_error(&e, &d).unwrap() + 1e-12);
    }

    #[test]
    fn multiplicative_bound_implies_additive(d in distribution(3), noise in prop::collection::vec(-1.0..1.0f64, 8), eps in 0.0..0.5f64) {
        let c = perturbed(&d, &noise, eps);
        if let Some(m) = multiplicative_error(&c, &d).unwrap().value() {
            prop_assert!(additive_error(&c, &d).unwrap() <= m + 1e-12);
        }
    }

    #[test]
    fn conditioned_probabilities_sum_to_one(d in distribution(3), k in 0usize..3, y in 0usize..8) {
        let y = Bitstring::from_index(y, 3);
        if let (Ok(p0), Ok(p1)) = (conditioned_probability(&d, k, false, y), conditioned_probability(&d, k, true, y)) {
            prop_assert!((p0 + p1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn epsilon_round_trip(eps in 0.0..0.999f64) {
        prop_assert!((lemma_epsilon(lemma_epsilon_prime(eps).unwrap()).unwrap() - eps).abs() < 1e-12);
    }

    #[test]
    fn lemma_never_fails_on_premise_pairs(n in 1usize..=3, seed: u64, eps in 0.0..0.3f64) {
        let mut rng = stream_rng(seed, 0);
        let d = OutcomeDistribution::exact(n, normalized((0..1 << n).map(|_| rng.random::<f64>()).collect())).unwrap();
        let noise: Vec<f64> = (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = perturbed(&d, &noise, eps);
        match check_lemma_instance(&d, &c, eps).unwrap() {
            LemmaVerdict::Counterexample { witness, .. } => prop_assert!(false, "{witness:?}"),
            LemmaVerdict::PremiseFailed(m) => prop_assert!(!m.within(eps)),
            LemmaVerdict::Holds { margin, .. } => prop_assert!(margin >= -1e-12),
        }
    }
}

/// `C(y) = D(y)(1 + e_y)` renormalized, with the ratio kept inside `[1 - ε, 1 + ε]`.
fn perturbed(d: &OutcomeDistribution, noise: &[f64], eps: f64) -> OutcomeDistribution {
    // with t = ε/(2 + ε) the ratio (1 + t·e_y)/(1 + t·ē) stays within 1 ± ε
    let t = eps / (2.0 + eps);
    let raw: Vec<f64> = d.probs().iter().zip(noise).map(|(p, e)| p * (1.0 + t * e)).collect();
    OutcomeDistribution::exact(d.n_bits(), normalized(raw)).unwrap()
}
