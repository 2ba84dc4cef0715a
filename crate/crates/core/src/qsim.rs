//! Exact statevector reference simulator.
//!
//! Circuits act on `|input⟩` and are read out by a full computational-basis
//! measurement, so the exact outcome distribution is `|amplitude|²`. The gate
//! set covers what the paired hidden-variable circuits need: `RY` rotations
//! (a measurement at angle θ is `RY(-2θ)` followed by the basis readout),
//! `H`, `X`, `CNOT`, and a Bell-pair source.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::bits::{Bitstring, MAX_BITS};
use crate::distribution::{DistributionError, OutcomeDistribution};
use crate::math;
use crate::rng::stream_rng;

/// Largest supported register.
pub const MAX_QUBITS: usize = MAX_BITS;

/// Norm drift tolerated after any gate.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// One gate of a [`QuantumCircuit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateOp {
    /// Rotation about Y by `angle` radians.
    Ry {
        /// Target qubit.
        qubit: usize,
        /// Rotation angle in radians.
        angle: f64,
    },
    /// Hadamard.
    H {
        /// Target qubit.
        qubit: usize,
    },
    /// Pauli X.
    X {
        /// Target qubit.
        qubit: usize,
    },
    /// Controlled NOT.
    Cnot {
        /// Control qubit.
        control: usize,
        /// Target qubit.
        target: usize,
    },
    /// `H(a)` then `CNOT(a, b)`: maps `|00⟩` to `(|00⟩ + |11⟩)/√2`.
    BellPrep {
        /// Qubit receiving the Hadamard.
        qubit_a: usize,
        /// Partner qubit.
        qubit_b: usize,
    },
}

impl GateOp {
    fn qubits(&self) -> ([usize; 2], usize) {
        match *self {
            GateOp::Ry { qubit, .. } | GateOp::H { qubit } | GateOp::X { qubit } => ([qubit, 0], 1),
            GateOp::Cnot { control, target } => ([control, target], 2),
            GateOp::BellPrep { qubit_a, qubit_b } => ([qubit_a, qubit_b], 2),
        }
    }
}

/// Errors from circuit construction and simulation.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum QsimError {
    /// `n_qubits` is zero or above [`MAX_QUBITS`].
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCount(usize),
    /// A gate references a qubit outside the register.
    #[error("gate {gate} references qubit {qubit} but the circuit has {n_qubits}")]
    QubitOutOfRange {
        /// Position of the gate in the circuit.
        gate: usize,
        /// Offending index.
        qubit: usize,
        /// Register size.
        n_qubits: usize,
    },
    /// Two-qubit gate acting twice on one qubit.
    #[error("gate {gate} uses qubit {qubit} as both control and target")]
    RepeatedQubit {
        /// Position of the gate in the circuit.
        gate: usize,
        /// Repeated index.
        qubit: usize,
    },
    /// Non-finite rotation angle.
    #[error("gate {gate} has non-finite angle")]
    BadAngle {
        /// Position of the gate in the circuit.
        gate: usize,
    },
    /// Input string width differs from the register.
    #[error("input has {got} bits, circuit has {expected} qubits")]
    InputLength {
        /// Register size.
        expected: usize,
        /// Input width.
        got: usize,
    },
    /// Requested zero samples.
    #[error("sample count must be at least 1")]
    NoSamples,
    /// Distribution construction failed.
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// An ordered gate list over `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumCircuit {
    n_qubits: usize,
    gates: Vec<GateOp>,
}

impl QuantumCircuit {
    /// Empty circuit.
    pub fn new(n_qubits: usize) -> Result<Self, QsimError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QsimError::QubitCount(n_qubits));
        }
        Ok(Self {
            n_qubits,
            gates: Vec::new(),
        })
    }

    /// Validated circuit from a gate list.
    pub fn with_gates(n_qubits: usize, gates: impl IntoIterator<Item = GateOp>) -> Result<Self, QsimError> {
        let mut c = Self::new(n_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    /// Appends a gate after checking its qubit indices.
    pub fn push(&mut self, gate: GateOp) -> Result<&mut Self, QsimError> {
        let position = self.gates.len();
        let (qs, arity) = gate.qubits();
        for &q in &qs[..arity] {
            if q >= self.n_qubits {
                return Err(QsimError::QubitOutOfRange {
                    gate: position,
                    qubit: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        if arity == 2 && qs[0] == qs[1] {
            return Err(QsimError::RepeatedQubit {
                gate: position,
                qubit: qs[0],
            });
        }
        if let GateOp::Ry { angle, .. } = gate {
            if !angle.is_finite() {
                return Err(QsimError::BadAngle { gate: position });
            }
        }
        self.gates.push(gate);
        Ok(self)
    }

    /// Register size.
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Gates in application order.
    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    /// Number of gates `m`.
    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }
}

/// Dense `2^n` amplitude vector. Qubit `q` is bit `n - 1 - q` of the index,
/// matching [`Bitstring`] ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// Computational basis state `|bits⟩`.
    pub fn basis(bits: Bitstring) -> Self {
        let n = bits.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[bits.index()] = Complex64::new(1.0, 0.0);
        Self { n_qubits: n, amps }
    }

    /// Builds from raw amplitudes (length must be a power of two).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, QsimError> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n || n == 0 || n > MAX_QUBITS {
            return Err(QsimError::QubitCount(n));
        }
        Ok(Self { n_qubits: n, amps })
    }

    /// Register size.
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Amplitudes in index order.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Squared norm, 1 for a physical state.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn apply_single(&mut self, qubit: usize, m: [[f64; 2]; 2]) {
        let mask = self.mask(qubit);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | mask]);
                self.amps[i] = a0 * m[0][0] + a1 * m[0][1];
                self.amps[i | mask] = a0 * m[1][0] + a1 * m[1][1];
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cm, tm) = (self.mask(control), self.mask(target));
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    /// Applies one gate in place. Indices are trusted; circuits validate them.
    pub fn apply(&mut self, gate: &GateOp) {
        match *gate {
            GateOp::Ry { qubit, angle } => {
                let (c, s) = (math::cos(angle / 2.0), math::sin(angle / 2.0));
                self.apply_single(qubit, [[c, -s], [s, c]]);
            }
            GateOp::H { qubit } => {
                let r = core::f64::consts::FRAC_1_SQRT_2;
                self.apply_single(qubit, [[r, r], [r, -r]]);
            }
            GateOp::X { qubit } => self.apply_single(qubit, [[0.0, 1.0], [1.0, 0.0]]),
            GateOp::Cnot { control, target } => self.apply_cnot(control, target),
            GateOp::BellPrep { qubit_a, qubit_b } => {
                self.apply(&GateOp::H { qubit: qubit_a });
                self.apply_cnot(qubit_a, qubit_b);
            }
        }
    }

    /// Born-rule distribution of a full basis measurement.
    pub fn distribution(&self) -> Result<OutcomeDistribution, DistributionError> {
        OutcomeDistribution::exact(self.n_qubits, self.amps.iter().map(|a| a.norm_sqr()).collect())
    }
}

fn check_input(circuit: &QuantumCircuit, input: Bitstring) -> Result<(), QsimError> {
    if input.len() != circuit.n_qubits() {
        return Err(QsimError::InputLength {
            expected: circuit.n_qubits(),
            got: input.len(),
        });
    }
    Ok(())
}

/// State after applying every gate of `circuit` to `|input⟩`.
pub fn prepare(circuit: &QuantumCircuit, input: Bitstring) -> Result<Statevector, QsimError> {
    check_input(circuit, input)?;
    let mut state = Statevector::basis(input);
    for g in circuit.gates() {
        state.apply(g);
    }
    Ok(state)
}

/// Exact output distribution `P^QM(y)` over all `n_qubits`-bit outcomes.
pub fn outcome_distribution(circuit: &QuantumCircuit, input: Bitstring) -> Result<OutcomeDistribution, QsimError> {
    Ok(prepare(circuit, input)?.distribution()?)
}

/// `n` i.i.d. draws from `circuit` on `input`, seeded.
pub fn sample(circuit: &QuantumCircuit, input: Bitstring, seed: u64, n: u64) -> Result<OutcomeDistribution, QsimError> {
    sample_with_rng(circuit, input, n, &mut stream_rng(seed, 0))
}

/// As [`sample`] with a caller-owned generator.
pub fn sample_with_rng<R: Rng + ?Sized>(
    circuit: &QuantumCircuit,
    input: Bitstring,
    n: u64,
    rng: &mut R,
) -> Result<OutcomeDistribution, QsimError> {
    if n == 0 {
        return Err(QsimError::NoSamples);
    }
    let exact = outcome_distribution(circuit, input)?;
    let counts = draw_counts(&exact, n, rng);
    Ok(OutcomeDistribution::from_counts(exact.n_bits(), &counts)?)
}

/// Count table of `n` draws from `dist` by inverse-CDF lookup.
pub fn draw_counts<R: Rng + ?Sized>(dist: &OutcomeDistribution, n: u64, rng: &mut R) -> Vec<u64> {
    let probs = dist.probs();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    // last outcome with non-zero mass absorbs rounding
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let i = cdf.partition_point(|&c| c <= u).min(last);
        counts[i] += 1;
    }
    counts
}
