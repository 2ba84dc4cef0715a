//! Extended-Schulman hidden-variable circuits.
//!
//! A model carries one polarization angle `φ_j ∈ [0, π)` per wire. Layers run
//! in order: init layers assign fixed or shared-random angles, gate layers
//! apply deterministic angle maps, kick layers add independent Lorentz kicks.
//! The final measurement either reads each angle against its analyzer axis
//! θ_j (unconstrained, causal variant) or demands alignment with θ_j or
//! θ_j + π/2 within a tolerance and rejects the whole trial otherwise.

pub mod kick;

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::bits::{Bitstring, MAX_BITS};
use crate::math::{self, FRAC_PI_2, FRAC_PI_4, PI};

pub use kick::{normalization_constant, sample_kick, KickError, KickLaw, KickParams};

/// Initial value of one wire.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitSpec {
    /// A given angle (wrapped into `[0, π)`).
    Fixed(f64),
    /// Uniform on `[0, π)`; wires sharing a group id within one init layer
    /// receive the same draw.
    SharedRandom(u32),
}

/// Deterministic angle map of a gate layer. All maps act modulo π.
#[derive(Clone, Copy, Debug, PartialEq)]
#[non_exhaustive]
pub enum DeterministicGate {
    /// `φ_target += φ_control`: the hidden-variable stand-in for a CNOT.
    AddControlToTarget {
        /// Wire whose angle is added.
        control: usize,
        /// Wire that receives it.
        target: usize,
    },
    /// `φ_wire += angle`; a rotation by `-θ` is `AddConstant(-θ)`.
    AddConstant {
        /// Rotated wire.
        wire: usize,
        /// Added angle, radians.
        angle: f64,
    },
    /// No-op.
    Identity,
}

/// One layer of a model.
#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    /// Assign initial values.
    Init(Vec<(usize, InitSpec)>),
    /// Deterministic map.
    Gate(DeterministicGate),
    /// Independent kick on each listed wire.
    Kick {
        /// Kicked wires.
        wires: Vec<usize>,
        /// Kick law shared by the layer.
        params: KickParams,
    },
}

/// The closing measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementLayer {
    /// Analyzer axis θ_j per wire.
    pub angles: Vec<f64>,
    /// Alignment tolerance δφ_M; 0 means the exact limit.
    pub tolerance: f64,
    /// `false` reads angles without imposing a constraint (causal variant).
    pub constrained: bool,
}

/// A trial's outcome: a bit per wire, or rejection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleResult {
    /// Accepted; bit `j` belongs to wire `j`.
    Bits(Bitstring),
    /// Rejected by the constrained measurement.
    Failed,
}

impl SampleResult {
    /// The bits, if accepted.
    pub fn bits(self) -> Option<Bitstring> {
        match self {
            SampleResult::Bits(b) => Some(b),
            SampleResult::Failed => None,
        }
    }
}

/// Structural errors in a model or state.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum HvError {
    /// `n_wires` is zero or above the outcome-width cap.
    #[error("wire count {0} outside 1..={MAX_BITS}")]
    WireCount(usize),
    /// A layer names a wire outside the model.
    #[error("layer {layer} references wire {wire} but the model has {n_wires}")]
    WireOutOfRange {
        /// Layer position (the measurement counts as `layers.len()`).
        layer: usize,
        /// Offending wire.
        wire: usize,
        /// Wire count.
        n_wires: usize,
    },
    /// `AddControlToTarget` with control = target.
    #[error("layer {layer}: control and target are both wire {wire}")]
    SelfControl {
        /// Layer position.
        layer: usize,
        /// Repeated wire.
        wire: usize,
    },
    /// Non-finite angle in a gate, init or measurement.
    #[error("layer {layer}: non-finite angle")]
    BadAngle {
        /// Layer position.
        layer: usize,
    },
    /// Measurement angle count differs from the wire count.
    #[error("measurement has {got} angles for {expected} wires")]
    MeasurementArity {
        /// Wire count.
        expected: usize,
        /// Angle count.
        got: usize,
    },
    /// Tolerance negative, or so wide that the two windows of a wire overlap.
    #[error("measurement tolerance {0} outside [0, π/4)")]
    Tolerance(f64),
    /// State dimension differs from the model.
    #[error("state has {got} wires, model has {expected}")]
    StateArity {
        /// Model wire count.
        expected: usize,
        /// State wire count.
        got: usize,
    },
}

/// Per-trial hidden-variable state.
#[derive(Clone, Debug, PartialEq)]
pub struct HVState {
    angles: Vec<f64>,
}

impl HVState {
    /// All wires at angle 0.
    pub fn zeros(n_wires: usize) -> Self {
        Self {
            angles: vec![0.0; n_wires],
        }
    }

    /// From explicit angles (wrapped into `[0, π)`).
    pub fn from_angles(angles: impl IntoIterator<Item = f64>) -> Self {
        Self {
            angles: angles.into_iter().map(math::wrap_pi).collect(),
        }
    }

    /// Current angles.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    fn check_wire(&self, layer: usize, wire: usize) -> Result<(), HvError> {
        if wire >= self.angles.len() {
            return Err(HvError::WireOutOfRange {
                layer,
                wire,
                n_wires: self.angles.len(),
            });
        }
        Ok(())
    }

    /// Applies `layer` in place. `position` only labels errors.
    pub fn apply<R: Rng + ?Sized>(&mut self, position: usize, layer: &Layer, rng: &mut R) -> Result<(), HvError> {
        match layer {
            Layer::Init(assignments) => {
                let mut groups: Vec<(u32, f64)> = Vec::new();
                for &(wire, spec) in assignments {
                    self.check_wire(position, wire)?;
                    self.angles[wire] = match spec {
                        InitSpec::Fixed(angle) => math::wrap_pi(angle),
                        InitSpec::SharedRandom(group) => match groups.iter().find(|(g, _)| *g == group) {
                            Some(&(_, v)) => v,
                            None => {
                                let v = math::wrap_pi(rng.random::<f64>() * PI);
                                groups.push((group, v));
                                v
                            }
                        },
                    };
                }
            }
            Layer::Gate(gate) => match *gate {
                DeterministicGate::AddControlToTarget { control, target } => {
                    self.check_wire(position, control)?;
                    self.check_wire(position, target)?;
                    self.angles[target] = math::wrap_pi(self.angles[target] + self.angles[control]);
                }
                DeterministicGate::AddConstant { wire, angle } => {
                    self.check_wire(position, wire)?;
                    self.angles[wire] = math::wrap_pi(self.angles[wire] + angle);
                }
                DeterministicGate::Identity => {}
            },
            Layer::Kick { wires, params } => {
                for &wire in wires {
                    self.check_wire(position, wire)?;
                    let dphi = params.law().sample(rng);
                    self.angles[wire] = math::wrap_pi(self.angles[wire] + dphi);
                }
            }
        }
        Ok(())
    }
}

/// Functional form of [`HVState::apply`].
pub fn apply_layer<R: Rng + ?Sized>(state: &HVState, layer: &Layer, rng: &mut R) -> Result<HVState, HvError> {
    let mut next = state.clone();
    next.apply(0, layer, rng)?;
    Ok(next)
}

/// Reads out a state.
///
/// With `d` the axis distance between `φ_j` and `θ_j`: constrained readout
/// gives bit 0 for `d < δφ_M`, bit 1 for `|d - π/2| < δφ_M`, and rejects the
/// trial otherwise; unconstrained readout gives bit 0 for `d < π/4` and bit 1
/// for `d ≥ π/4`.
pub fn measure(state: &HVState, m: &MeasurementLayer) -> Result<SampleResult, HvError> {
    if state.angles.len() != m.angles.len() {
        return Err(HvError::StateArity {
            expected: m.angles.len(),
            got: state.angles.len(),
        });
    }
    let mut bits = [false; MAX_BITS];
    for (j, (&phi, &theta)) in state.angles.iter().zip(&m.angles).enumerate() {
        let d = math::axis_distance(phi, theta);
        bits[j] = if m.constrained {
            if d < m.tolerance {
                false
            } else if FRAC_PI_2 - d < m.tolerance {
                true
            } else {
                return Ok(SampleResult::Failed);
            }
        } else {
            d >= FRAC_PI_4
        };
    }
    Ok(SampleResult::Bits(Bitstring::from_bits(&bits[..state.angles.len()])))
}

/// A validated hidden-variable circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct HVModel {
    n_wires: usize,
    layers: Vec<Layer>,
    measurement: MeasurementLayer,
}

impl HVModel {
    /// Checks wire indices, angles and the measurement layer.
    pub fn new(n_wires: usize, layers: Vec<Layer>, measurement: MeasurementLayer) -> Result<Self, HvError> {
        if n_wires == 0 || n_wires > MAX_BITS {
            return Err(HvError::WireCount(n_wires));
        }
        let in_range = |layer: usize, wire: usize| {
            if wire < n_wires {
                Ok(())
            } else {
                Err(HvError::WireOutOfRange { layer, wire, n_wires })
            }
        };
        for (i, layer) in layers.iter().enumerate() {
            match layer {
                Layer::Init(assignments) => {
                    for &(wire, spec) in assignments {
                        in_range(i, wire)?;
                        if let InitSpec::Fixed(a) = spec {
                            if !a.is_finite() {
                                return Err(HvError::BadAngle { layer: i });
                            }
                        }
                    }
                }
                Layer::Gate(DeterministicGate::AddControlToTarget { control, target }) => {
                    in_range(i, *control)?;
                    in_range(i, *target)?;
                    if control == target {
                        return Err(HvError::SelfControl {
                            layer: i,
                            wire: *control,
                        });
                    }
                }
                Layer::Gate(DeterministicGate::AddConstant { wire, angle }) => {
                    in_range(i, *wire)?;
                    if !angle.is_finite() {
                        return Err(HvError::BadAngle { layer: i });
                    }
                }
                Layer::Gate(DeterministicGate::Identity) => {}
                Layer::Kick { wires, .. } => {
                    for &w in wires {
                        in_range(i, w)?;
                    }
                }
            }
        }
        if measurement.angles.len() != n_wires {
            return Err(HvError::MeasurementArity {
                expected: n_wires,
                got: measurement.angles.len(),
            });
        }
        if measurement.angles.iter().any(|a| !a.is_finite()) {
            return Err(HvError::BadAngle { layer: layers.len() });
        }
        let tol = measurement.tolerance;
        if tol < 0.0 || tol.is_nan() || (measurement.constrained && tol >= FRAC_PI_4) {
            return Err(HvError::Tolerance(tol));
        }
        Ok(Self {
            n_wires,
            layers,
            measurement,
        })
    }

    /// Number of wires (signals φ_j).
    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    /// Layers before the measurement.
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Total layer count, measurement included.
    pub fn layer_count(&self) -> usize {
        self.layers.len() + 1
    }

    /// The closing measurement.
    pub fn measurement(&self) -> &MeasurementLayer {
        &self.measurement
    }

    /// Copy with a different measurement (same wires and layers).
    pub fn with_measurement(&self, measurement: MeasurementLayer) -> Result<Self, HvError> {
        Self::new(self.n_wires, self.layers.clone(), measurement)
    }

    /// Runs every layer from the all-zero state and returns the final state.
    pub fn evolve<R: Rng + ?Sized>(&self, rng: &mut R) -> HVState {
        let mut state = HVState::zeros(self.n_wires);
        for (i, layer) in self.layers.iter().enumerate() {
            // indices were validated at construction
            state.apply(i, layer, rng).expect("validated model");
        }
        state
    }

    /// One full trial: evolve, then measure.
    pub fn trial<R: Rng + ?Sized>(&self, rng: &mut R) -> SampleResult {
        measure(&self.evolve(rng), &self.measurement).expect("validated model")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn meas(angles: Vec<f64>, tolerance: f64, constrained: bool) -> MeasurementLayer {
        MeasurementLayer {
            angles,
            tolerance,
            constrained,
        }
    }

    #[test]
    fn add_constant_wraps() {
        let mut rng = stream_rng(0, 0);
        let s = HVState::from_angles([PI / 8.0]);
        let next = apply_layer(
            &s,
            &Layer::Gate(DeterministicGate::AddConstant {
                wire: 0,
                angle: -PI / 4.0,
            }),
            &mut rng,
        )
        .unwrap();
        assert!((next.angles()[0] - 7.0 * PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn add_control_to_target() {
        let mut rng = stream_rng(0, 0);
        let s = HVState::from_angles([PI / 3.0, PI / 2.0]);
        let next = apply_layer(
            &s,
            &Layer::Gate(DeterministicGate::AddControlToTarget { control: 0, target: 1 }),
            &mut rng,
        )
        .unwrap();
        assert!((next.angles()[1] - 5.0 * PI / 6.0).abs() < 1e-15);
        assert_eq!(next.angles()[0], PI / 3.0);
    }

    #[test]
    fn shared_random_groups_are_equal() {
        let mut rng = stream_rng(3, 0);
        let init = Layer::Init(vec![
            (0, InitSpec::SharedRandom(7)),
            (1, InitSpec::SharedRandom(9)),
            (2, InitSpec::SharedRandom(9)),
        ]);
        for _ in 0..100 {
            let s = apply_layer(&HVState::zeros(3), &init, &mut rng).unwrap();
            assert_eq!(s.angles()[1], s.angles()[2]);
            assert_ne!(s.angles()[0], s.angles()[1]);
            assert!(s.angles().iter().all(|a| (0.0..PI).contains(a)));
        }
    }

    #[test]
    fn wire_out_of_range_is_an_error() {
        let mut rng = stream_rng(0, 0);
        let layer = Layer::Kick {
            wires: vec![3],
            params: KickParams::lorentz(0.1).unwrap(),
        };
        assert!(matches!(
            apply_layer(&HVState::zeros(2), &layer, &mut rng),
            Err(HvError::WireOutOfRange { wire: 3, .. })
        ));
        assert!(matches!(
            HVModel::new(2, vec![layer], meas(vec![0.0, 0.0], 0.1, true)),
            Err(HvError::WireOutOfRange {
                layer: 0,
                wire: 3,
                n_wires: 2
            })
        ));
    }

    #[test]
    fn measurement_rules() {
        let theta = 0.4;
        let tight = meas(vec![theta], 1e-3, true);
        let at = |phi: f64| measure(&HVState::from_angles([phi]), &tight).unwrap();
        assert_eq!(at(theta), SampleResult::Bits("0".parse().unwrap()));
        assert_eq!(at(theta + PI / 2.0), SampleResult::Bits("1".parse().unwrap()));
        assert_eq!(at(theta + PI), SampleResult::Bits("0".parse().unwrap()));
        assert_eq!(at(theta + PI / 4.0), SampleResult::Failed);

        let loose = meas(vec![theta], 0.0, false);
        let read = |phi: f64| {
            measure(&HVState::from_angles([phi]), &loose)
                .unwrap()
                .bits()
                .unwrap()
                .bit(0)
        };
        assert!(read(theta + PI / 3.0));
        assert!(!read(theta + 0.7));
        assert!(read(theta + FRAC_PI_4 + 1e-12));
        assert!(!read(theta - 0.7 + PI));
    }

    #[test]
    fn model_validation() {
        assert_eq!(
            HVModel::new(0, vec![], meas(vec![], 0.1, true)),
            Err(HvError::WireCount(0))
        );
        assert_eq!(
            HVModel::new(1, vec![], meas(vec![0.0, 0.0], 0.1, true)),
            Err(HvError::MeasurementArity { expected: 1, got: 2 })
        );
        assert_eq!(
            HVModel::new(1, vec![], meas(vec![0.0], PI / 4.0, true)),
            Err(HvError::Tolerance(PI / 4.0))
        );
        assert!(HVModel::new(1, vec![], meas(vec![0.0], 1.0, false)).is_ok());
        assert!(matches!(
            HVModel::new(
                2,
                vec![Layer::Gate(DeterministicGate::AddControlToTarget {
                    control: 1,
                    target: 1
                })],
                meas(vec![0.0; 2], 0.1, true)
            ),
            Err(HvError::SelfControl { .. })
        ));
    }

    #[test]
    fn fixed_init_without_kicks_is_deterministic() {
        let m = HVModel::new(
            1,
            vec![Layer::Init(vec![(0, InitSpec::Fixed(0.3))])],
            meas(vec![0.3], 1e-3, true),
        )
        .unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..10 {
            assert_eq!(m.trial(&mut rng), SampleResult::Bits("0".parse().unwrap()));
        }
        assert_eq!(m.layer_count(), 2);
    }
}
