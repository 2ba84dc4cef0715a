//! Paired quantum and hidden-variable builds of the three example systems.
//!
//! Both sides work in the computational frame. A quantum `RY(-2θ)` before
//! measurement pairs with an hv `AddConstant(-θ)` followed by a measurement at
//! angle 0.
//!
//! hv wiring:
//! - malus: `Fixed(x·π/2)` → kick → rotate → measure.
//! - epr: wires 0 and 1 share one uniform angle → one kick layer per wire →
//!   rotate → measure.
//! - double_bell_cnot: wires 0,1 share `φa`, wires 2,3 share `φb` →
//!   `φ2 += φ1` → one kick layer per wire → rotate → measure.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::bits::Bitstring;
use crate::hvmodel::{DeterministicGate, HVModel, HvError, InitSpec, KickError, KickParams, Layer, MeasurementLayer};
use crate::math::FRAC_PI_2;
use crate::qsim::{GateOp, QsimError, QuantumCircuit};

/// The supported systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CircuitId {
    /// One photon through a rotated analyzer.
    Malus,
    /// An entangled pair measured at two angles.
    Epr,
    /// Two Bell pairs joined by a CNOT.
    DoubleBellCnot,
}

impl CircuitId {
    /// Every supported id.
    pub const ALL: [CircuitId; 3] = [CircuitId::Malus, CircuitId::Epr, CircuitId::DoubleBellCnot];

    /// Lower-case identifier.
    pub fn as_str(self) -> &'static str {
        match self {
            CircuitId::Malus => "malus",
            CircuitId::Epr => "epr",
            CircuitId::DoubleBellCnot => "double_bell_cnot",
        }
    }

    /// Wire / qubit count.
    pub fn n_wires(self) -> usize {
        match self {
            CircuitId::Malus => 1,
            CircuitId::Epr => 2,
            CircuitId::DoubleBellCnot => 4,
        }
    }
}

impl fmt::Display for CircuitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Unknown circuit name.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unsupported circuit id {0:?}; expected malus, epr or double_bell_cnot")]
pub struct UnsupportedCircuit(pub alloc::string::String);

impl FromStr for CircuitId {
    type Err = UnsupportedCircuit;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CircuitId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| UnsupportedCircuit(s.into()))
    }
}

/// Kick width δφ_L, measurement tolerance δφ_M and truncation δα.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deltas {
    /// Kick width δφ_L.
    pub phi_l: f64,
    /// Measurement tolerance δφ_M.
    pub phi_m: f64,
    /// Kick truncation δα; the kick support is `|Δφ| ≤ 1/δα`.
    pub alpha: f64,
}

impl Deltas {
    /// All three equal to `d`.
    pub fn equal(d: f64) -> Self {
        Self {
            phi_l: d,
            phi_m: d,
            alpha: d,
        }
    }

    /// Kick parameters implied by δφ_L and δα.
    pub fn kick(&self) -> Result<KickParams, KickError> {
        KickParams::new(self.phi_l, Some(self.alpha))
    }

    /// True when every component is strictly below the matching one of `other`.
    pub fn strictly_below(&self, other: &Deltas) -> bool {
        self.phi_l < other.phi_l && self.phi_m < other.phi_m && self.alpha < other.alpha
    }
}

/// Structural variations used by the irrelevance checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildOptions {
    /// Additional kick layers on every wire, after the default ones.
    pub extra_kick_layers: usize,
    /// EPR only: keep the kick on wire 0 and drop the one on wire 1.
    pub drop_second_kick: bool,
}

/// A system and its angles, independent of the deltas.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    /// Which system.
    pub id: CircuitId,
    /// Malus only: the preparation bit `x`, so the photon starts at `x·π/2`.
    pub input: bool,
    /// Analyzer angle per wire.
    pub thetas: Vec<f64>,
    /// Structural options.
    pub options: BuildOptions,
}

/// Invalid builder arguments.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CircuitError {
    /// Angle count differs from the wire count.
    #[error("{id} takes {expected} angles, got {got}")]
    AngleCount {
        /// Circuit.
        id: CircuitId,
        /// Wire count.
        expected: usize,
        /// Supplied angles.
        got: usize,
    },
    /// Bad kick parameters.
    #[error(transparent)]
    Kick(#[from] KickError),
    /// Rejected by the hv model.
    #[error(transparent)]
    Model(#[from] HvError),
    /// Rejected by the quantum simulator.
    #[error(transparent)]
    Quantum(#[from] QsimError),
}

impl CircuitSpec {
    /// Photon prepared at `x·π/2`, analyzer at `θ2`.
    pub fn malus(x: bool, theta2: f64) -> Self {
        Self {
            id: CircuitId::Malus,
            input: x,
            thetas: vec![theta2],
            options: BuildOptions::default(),
        }
    }

    /// Entangled pair measured at `θ1`, `θ2`.
    pub fn epr(theta1: f64, theta2: f64) -> Self {
        Self {
            id: CircuitId::Epr,
            input: false,
            thetas: vec![theta1, theta2],
            options: BuildOptions::default(),
        }
    }

    /// Two Bell pairs, CNOT from wire 1 to wire 2, four analyzer angles.
    pub fn double_bell_cnot(thetas: [f64; 4]) -> Self {
        Self {
            id: CircuitId::DoubleBellCnot,
            input: false,
            thetas: thetas.to_vec(),
            options: BuildOptions::default(),
        }
    }

    /// Same spec with different options.
    pub fn with_options(mut self, options: BuildOptions) -> Self {
        self.options = options;
        self
    }

    fn check_arity(&self) -> Result<(), CircuitError> {
        let expected = self.id.n_wires();
        if self.thetas.len() != expected {
            return Err(CircuitError::AngleCount {
                id: self.id,
                expected,
                got: self.thetas.len(),
            });
        }
        Ok(())
    }

    /// Input bits of the quantum side.
    pub fn input_bits(&self) -> Bitstring {
        let mut bits = Bitstring::zeros(self.id.n_wires());
        if self.id == CircuitId::Malus {
            bits = bits.with_bit(0, self.input);
        }
        bits
    }

    /// The quantum circuit.
    pub fn quantum(&self) -> Result<QuantumCircuit, CircuitError> {
        self.check_arity()?;
        let mut gates = match self.id {
            CircuitId::Malus => vec![],
            CircuitId::Epr => vec![GateOp::BellPrep { qubit_a: 0, qubit_b: 1 }],
            CircuitId::DoubleBellCnot => vec![
                GateOp::BellPrep { qubit_a: 0, qubit_b: 1 },
                GateOp::BellPrep { qubit_a: 2, qubit_b: 3 },
                GateOp::Cnot { control: 1, target: 2 },
            ],
        };
        gates.extend(self.thetas.iter().enumerate().map(|(q, &t)| GateOp::Ry {
            qubit: q,
            angle: -2.0 * t,
        }));
        Ok(QuantumCircuit::with_gates(self.id.n_wires(), gates)?)
    }

    /// Layers before the measurement.
    fn hv_layers(&self, kick: KickParams) -> Vec<Layer> {
        let n = self.id.n_wires();
        let mut layers = match self.id {
            CircuitId::Malus => {
                let start = if self.input { FRAC_PI_2 } else { 0.0 };
                vec![Layer::Init(vec![(0, InitSpec::Fixed(start))])]
            }
            CircuitId::Epr => vec![Layer::Init(vec![
                (0, InitSpec::SharedRandom(0)),
                (1, InitSpec::SharedRandom(0)),
            ])],
            CircuitId::DoubleBellCnot => vec![
                Layer::Init(vec![
                    (0, InitSpec::SharedRandom(0)),
                    (1, InitSpec::SharedRandom(0)),
                    (2, InitSpec::SharedRandom(1)),
                    (3, InitSpec::SharedRandom(1)),
                ]),
                Layer::Gate(DeterministicGate::AddControlToTarget { control: 1, target: 2 }),
            ],
        };
        let kicked = if self.id == CircuitId::Epr && self.options.drop_second_kick {
            1
        } else {
            n
        };
        for wire in 0..kicked {
            layers.push(Layer::Kick {
                wires: vec![wire],
                params: kick,
            });
        }
        for _ in 0..self.options.extra_kick_layers {
            layers.push(Layer::Kick {
                wires: (0..n).collect(),
                params: kick,
            });
        }
        for (wire, &t) in self.thetas.iter().enumerate() {
            layers.push(Layer::Gate(DeterministicGate::AddConstant { wire, angle: -t }));
        }
        layers
    }

    /// Constrained hv model at `deltas`.
    pub fn hv(&self, deltas: Deltas) -> Result<HVModel, CircuitError> {
        self.check_arity()?;
        let n = self.id.n_wires();
        let measurement = MeasurementLayer {
            angles: vec![0.0; n],
            tolerance: deltas.phi_m,
            constrained: true,
        };
        Ok(HVModel::new(n, self.hv_layers(deltas.kick()?), measurement)?)
    }

    /// Unconstrained (causal) hv model with kicks of width δφ_L truncated at δα.
    pub fn causal_hv(&self, phi_l: f64, alpha: f64) -> Result<HVModel, CircuitError> {
        self.check_arity()?;
        let n = self.id.n_wires();
        let measurement = MeasurementLayer {
            angles: vec![0.0; n],
            tolerance: 0.0,
            constrained: false,
        };
        Ok(HVModel::new(
            n,
            self.hv_layers(KickParams::new(phi_l, Some(alpha))?),
            measurement,
        )?)
    }

    /// Both sides at `deltas`.
    pub fn build(&self, deltas: Deltas) -> Result<CircuitPair, CircuitError> {
        Ok(CircuitPair {
            spec: self.clone(),
            quantum: self.quantum()?,
            input: self.input_bits(),
            hv: self.hv(deltas)?,
            deltas,
        })
    }
}

/// A quantum circuit and its hidden-variable counterpart.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitPair {
    /// System and angles.
    pub spec: CircuitSpec,
    /// Quantum side.
    pub quantum: QuantumCircuit,
    /// Quantum input bits.
    pub input: Bitstring,
    /// Constrained hv side.
    pub hv: HVModel,
    /// Deltas used for `hv`.
    pub deltas: Deltas,
}

impl CircuitPair {
    /// Named parameters, `x` for malus and `theta1..` for the analyzer angles.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        const NAMES: [&str; 4] = ["theta1", "theta2", "theta3", "theta4"];
        let mut out = Vec::new();
        match self.spec.id {
            CircuitId::Malus => {
                out.push(("x", if self.spec.input { 1.0 } else { 0.0 }));
                out.push(("theta2", self.spec.thetas[0]));
            }
            _ => out.extend(NAMES.iter().copied().zip(self.spec.thetas.iter().copied())),
        }
        out
    }
}

/// Malus pair at `deltas`.
pub fn build_malus(x: bool, theta2: f64, deltas: Deltas) -> Result<CircuitPair, CircuitError> {
    CircuitSpec::malus(x, theta2).build(deltas)
}

/// EPR pair at `deltas`.
pub fn build_epr(theta1: f64, theta2: f64, deltas: Deltas) -> Result<CircuitPair, CircuitError> {
    CircuitSpec::epr(theta1, theta2).build(deltas)
}

/// Double-Bell-with-CNOT pair at `deltas`.
pub fn build_double_bell_cnot(thetas: [f64; 4], deltas: Deltas) -> Result<CircuitPair, CircuitError> {
    CircuitSpec::double_bell_cnot(thetas).build(deltas)
}
