//! JSON and CSV file formats.
//!
//! Every output carries a `schema_version`. Distribution files follow
//! `{"n_bits": int, "probs": {"bitstring": float, ...}}`; readers accept them
//! without a version field. Maps are ordered, so identical runs serialize to
//! identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use retrolab_core::hvmodel::{DeterministicGate, HVModel, InitSpec, KickParams, Layer, MeasurementLayer};
use retrolab_core::metrics::{ErrorReport, LemmaVerdict, Multiplicative, Verdict};
use retrolab_core::qsim::{GateOp, QuantumCircuit};
use retrolab_core::samplers::{RunReport, SweepRow};
use retrolab_core::{Bitstring, OutcomeDistribution};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Version written into every output file.
pub const SCHEMA_VERSION: u32 = 1;

/// File-format failures.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    /// Filesystem error.
    #[error("{path}: {source}")]
    Io {
        /// File involved.
        path: String,
        /// Underlying error.
        source: std::io::Error,
    },
    /// Malformed JSON.
    #[error("{path}: {source}")]
    Json {
        /// File involved.
        path: String,
        /// Underlying error.
        source: serde_json::Error,
    },
    /// Well-formed JSON with invalid content.
    #[error("{path}: {message}")]
    Content {
        /// File involved.
        path: String,
        /// What is wrong.
        message: String,
    },
    /// CSV writer failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

/// Sparse distribution file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    /// Format version.
    #[serde(default = "default_version")]
    pub schema_version: u32,
    /// Outcome width.
    pub n_bits: usize,
    /// Non-zero probabilities keyed by bitstring.
    pub probs: BTreeMap<String, f64>,
    /// Draw count when empirical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u64>,
}

impl DistributionFile {
    /// Sparse view of `d`.
    pub fn from_distribution(d: &OutcomeDistribution) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n_bits: d.n_bits(),
            probs: d.support().map(|(b, p)| (b.to_text(), p)).collect(),
            n_samples: d.n_samples(),
        }
    }

    /// Validated distribution. Empirical files keep their sample count.
    pub fn to_distribution(&self) -> Result<OutcomeDistribution, String> {
        let mut entries = Vec::with_capacity(self.probs.len());
        for (text, &p) in &self.probs {
            let bits: Bitstring = text.parse().map_err(|e| format!("outcome {text:?}: {e}"))?;
            if bits.len() != self.n_bits {
                return Err(format!(
                    "outcome {text:?} has {} bits, expected {}",
                    bits.len(),
                    self.n_bits
                ));
            }
            entries.push((bits, p));
        }
        let exact = OutcomeDistribution::from_sparse(self.n_bits, entries).map_err(|e| e.to_string())?;
        match self.n_samples {
            None => Ok(exact),
            Some(n) => {
                let counts: Vec<u64> = exact.probs().iter().map(|p| (p * n as f64).round() as u64).collect();
                OutcomeDistribution::from_counts(self.n_bits, &counts).map_err(|e| e.to_string())
            }
        }
    }
}

/// Point estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateFile {
    /// Mean.
    pub mean: f64,
    /// Standard error.
    pub stderr: f64,
}

/// A run report as written by `simulate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    /// Format version.
    pub schema_version: u32,
    /// Fully resolved configuration.
    pub config: ExperimentConfig,
    /// `sequential`, `naive`, `collapsed` or `exact`.
    pub strategy: String,
    /// Accepted trials.
    pub accepted: Option<u64>,
    /// Rejected trials.
    pub rejected: Option<u64>,
    /// `accepted / (accepted + rejected)`.
    pub acceptance_rate: Option<f64>,
    /// Proposals drawn.
    pub proposals: Option<u64>,
    /// Estimated acceptance probability of one literal trial.
    pub acceptance_estimate: Option<EstimateFile>,
    /// Ratios above the collapsed bound.
    pub bound_violations: Option<u64>,
    /// Seed.
    pub seed: u64,
    /// Worker count.
    pub workers: usize,
    /// Output distribution.
    pub distribution: DistributionFile,
}

impl ReportFile {
    /// Report for a sampled run.
    pub fn from_run(config: &ExperimentConfig, r: &RunReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            strategy: r.strategy.as_str().into(),
            accepted: Some(r.accepted),
            rejected: Some(r.rejected),
            acceptance_rate: Some(r.acceptance_rate),
            proposals: Some(r.proposals),
            acceptance_estimate: Some(EstimateFile {
                mean: r.acceptance_estimate.mean,
                stderr: r.acceptance_estimate.stderr,
            }),
            bound_violations: Some(r.bound_violations),
            seed: r.seed,
            workers: r.workers,
            distribution: DistributionFile::from_distribution(&r.distribution),
        }
    }

    /// Report for an exact limit evaluation.
    pub fn from_exact(config: &ExperimentConfig, d: &OutcomeDistribution) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            strategy: "exact".into(),
            accepted: None,
            rejected: None,
            acceptance_rate: None,
            proposals: None,
            acceptance_estimate: None,
            bound_violations: None,
            seed: config.seed,
            workers: config.workers,
            distribution: DistributionFile::from_distribution(d),
        }
    }
}

/// `holds` / `fails` / `inconclusive`.
pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "fails",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// Comparison report written by `compare`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReportFile {
    /// Format version.
    pub schema_version: u32,
    /// Resolved configuration, absent for file-vs-file comparisons.
    pub config: Option<ExperimentConfig>,
    /// `Σ_y |C(y) - D(y)|`.
    pub additive: f64,
    /// Sum of 95% Wilson radii, when the candidate is empirical.
    pub additive_ci95: Option<f64>,
    /// Multiplicative error, `null` when undefined.
    pub multiplicative: Option<f64>,
    /// Outcomes with `D(y) = 0 < C(y)`.
    pub support_violation: Vec<String>,
    /// Candidate sample count.
    pub n_samples: Option<u64>,
    /// Threshold.
    pub epsilon: f64,
    /// Additive verdict against `epsilon`.
    pub verdict: String,
    /// Candidate run, when one was sampled.
    pub run: Option<ReportFile>,
}

impl ErrorReportFile {
    /// Serializable view of `e`.
    pub fn new(config: Option<&ExperimentConfig>, e: &ErrorReport, epsilon: f64, run: Option<ReportFile>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config: config.cloned(),
            additive: e.additive,
            additive_ci95: e.additive_ci95,
            multiplicative: match &e.multiplicative {
                Multiplicative::Defined(v) => Some(*v),
                Multiplicative::Undefined(_) => None,
            },
            support_violation: e.support_violation().iter().map(|b| b.to_text()).collect(),
            n_samples: e.n_samples,
            epsilon,
            verdict: verdict_name(e.additive_verdict(epsilon)).into(),
            run,
        }
    }
}

/// One-line summary of a lemma check.
pub fn describe_lemma(v: &LemmaVerdict) -> String {
    match v {
        LemmaVerdict::PremiseFailed(Multiplicative::Defined(m)) => {
            format!("PREMISE_FAILED multiplicative_error={m}")
        }
        LemmaVerdict::PremiseFailed(Multiplicative::Undefined(ys)) => {
            let ys: Vec<String> = ys.iter().map(|b| b.to_text()).collect();
            format!("PREMISE_FAILED support_violation={}", ys.join(","))
        }
        LemmaVerdict::Holds { bound, worst, margin } => match worst {
            Some(w) => format!(
                "HOLDS bound={bound} worst=(k={}, b={}, y'={}) gap={} margin={margin}",
                w.k,
                u8::from(w.b),
                w.y_prime.to_text(),
                w.gap()
            ),
            None => format!("HOLDS bound={bound} worst=none margin={margin}"),
        },
        LemmaVerdict::Counterexample { bound, witness: w } => format!(
            "COUNTEREXAMPLE bound={bound} at (k={}, b={}, y'={}) c_bar={} d_bar={} gap={}",
            w.k,
            u8::from(w.b),
            w.y_prime.to_text(),
            w.c_bar,
            w.d_bar,
            w.gap()
        ),
    }
}

/// One gate of a circuit file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateFile {
    /// `RY(angle)`.
    Ry {
        /// Qubit.
        qubit: usize,
        /// Angle, radians.
        angle: f64,
    },
    /// Hadamard.
    H {
        /// Qubit.
        qubit: usize,
    },
    /// Pauli X.
    X {
        /// Qubit.
        qubit: usize,
    },
    /// CNOT.
    Cnot {
        /// Control.
        control: usize,
        /// Target.
        target: usize,
    },
    /// Bell pair source.
    BellPrep {
        /// Hadamard qubit.
        qubit_a: usize,
        /// Partner.
        qubit_b: usize,
    },
}

impl From<GateOp> for GateFile {
    fn from(g: GateOp) -> Self {
        match g {
            GateOp::Ry { qubit, angle } => GateFile::Ry { qubit, angle },
            GateOp::H { qubit } => GateFile::H { qubit },
            GateOp::X { qubit } => GateFile::X { qubit },
            GateOp::Cnot { control, target } => GateFile::Cnot { control, target },
            GateOp::BellPrep { qubit_a, qubit_b } => GateFile::BellPrep { qubit_a, qubit_b },
        }
    }
}

impl From<GateFile> for GateOp {
    fn from(g: GateFile) -> Self {
        match g {
            GateFile::Ry { qubit, angle } => GateOp::Ry { qubit, angle },
            GateFile::H { qubit } => GateOp::H { qubit },
            GateFile::X { qubit } => GateOp::X { qubit },
            GateFile::Cnot { control, target } => GateOp::Cnot { control, target },
            GateFile::BellPrep { qubit_a, qubit_b } => GateOp::BellPrep { qubit_a, qubit_b },
        }
    }
}

/// Quantum side of a circuit pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitFile {
    /// Format version.
    pub schema_version: u32,
    /// Register size.
    pub n_qubits: usize,
    /// Input basis state.
    pub input: String,
    /// Gates in order.
    pub gates: Vec<GateFile>,
}

impl CircuitFile {
    /// Describes `circuit` on `input`.
    pub fn new(circuit: &QuantumCircuit, input: Bitstring) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n_qubits: circuit.n_qubits(),
            input: input.to_text(),
            gates: circuit.gates().iter().map(|&g| g.into()).collect(),
        }
    }

    /// Rebuilds the circuit and its input.
    pub fn to_circuit(&self) -> Result<(QuantumCircuit, Bitstring), String> {
        let circuit = QuantumCircuit::with_gates(self.n_qubits, self.gates.iter().map(|&g| g.into()))
            .map_err(|e| e.to_string())?;
        let input: Bitstring = self.input.parse().map_err(|e| format!("input: {e}"))?;
        Ok((circuit, input))
    }
}

/// Initial value in a model file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitFile {
    /// Fixed angle.
    Fixed(f64),
    /// Shared uniform group id.
    SharedRandom(u32),
}

/// One layer of a model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerFile {
    /// Initial values.
    Init {
        /// `(wire, value)` pairs.
        assignments: Vec<(usize, InitFile)>,
    },
    /// `φ_target += φ_control`.
    AddControlToTarget {
        /// Source wire.
        control: usize,
        /// Destination wire.
        target: usize,
    },
    /// `φ_wire += angle`.
    AddConstant {
        /// Wire.
        wire: usize,
        /// Angle.
        angle: f64,
    },
    /// No-op.
    Identity,
    /// Lorentz kicks.
    Kick {
        /// Kicked wires.
        wires: Vec<usize>,
        /// δφ_L.
        width: f64,
        /// δα, `null` when untruncated.
        truncation: Option<f64>,
    },
}

/// Hidden-variable side of a circuit pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    /// Format version.
    pub schema_version: u32,
    /// Wire count.
    pub n_wires: usize,
    /// Layers before measurement.
    pub layers: Vec<LayerFile>,
    /// Analyzer angles.
    pub measurement_angles: Vec<f64>,
    /// δφ_M.
    pub tolerance: f64,
    /// Post-selected (`true`) or plain readout.
    pub constrained: bool,
}

impl ModelFile {
    /// Describes `model`.
    pub fn new(model: &HVModel) -> Self {
        let layers = model
            .layers()
            .iter()
            .map(|l| match l {
                Layer::Init(a) => LayerFile::Init {
                    assignments: a
                        .iter()
                        .map(|&(w, s)| {
                            (
                                w,
                                match s {
                                    InitSpec::Fixed(x) => InitFile::Fixed(x),
                                    InitSpec::SharedRandom(g) => InitFile::SharedRandom(g),
                                },
                            )
                        })
                        .collect(),
                },
                Layer::Gate(DeterministicGate::AddControlToTarget { control, target }) => {
                    LayerFile::AddControlToTarget {
                        control: *control,
                        target: *target,
                    }
                }
                Layer::Gate(DeterministicGate::AddConstant { wire, angle }) => LayerFile::AddConstant {
                    wire: *wire,
                    angle: *angle,
                },
                Layer::Gate(_) => LayerFile::Identity,
                Layer::Kick { wires, params } => LayerFile::Kick {
                    wires: wires.clone(),
                    width: params.width(),
                    truncation: params.truncation(),
                },
            })
            .collect();
        let m = model.measurement();
        Self {
            schema_version: SCHEMA_VERSION,
            n_wires: model.n_wires(),
            layers,
            measurement_angles: m.angles.clone(),
            tolerance: m.tolerance,
            constrained: m.constrained,
        }
    }

    /// Rebuilds and validates the model.
    pub fn to_model(&self) -> Result<HVModel, String> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            layers.push(match l {
                LayerFile::Init { assignments } => Layer::Init(
                    assignments
                        .iter()
                        .map(|&(w, s)| {
                            (
                                w,
                                match s {
                                    InitFile::Fixed(x) => InitSpec::Fixed(x),
                                    InitFile::SharedRandom(g) => InitSpec::SharedRandom(g),
                                },
                            )
                        })
                        .collect(),
                ),
                LayerFile::AddControlToTarget { control, target } => {
                    Layer::Gate(DeterministicGate::AddControlToTarget {
                        control: *control,
                        target: *target,
                    })
                }
                LayerFile::AddConstant { wire, angle } => Layer::Gate(DeterministicGate::AddConstant {
                    wire: *wire,
                    angle: *angle,
                }),
                LayerFile::Identity => Layer::Gate(DeterministicGate::Identity),
                LayerFile::Kick {
                    wires,
                    width,
                    truncation,
                } => Layer::Kick {
                    wires: wires.clone(),
                    params: KickParams::new(*width, *truncation).map_err(|e| e.to_string())?,
                },
            });
        }
        let measurement = MeasurementLayer {
            angles: self.measurement_angles.clone(),
            tolerance: self.tolerance,
            constrained: self.constrained,
        };
        HVModel::new(self.n_wires, layers, measurement).map_err(|e| e.to_string())
    }
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let io = |source| FormatError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|source| FormatError::Json {
        path: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io)
}

/// Reads a JSON file.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Reads and validates a distribution file.
pub fn read_distribution(path: &Path) -> Result<OutcomeDistribution, FormatError> {
    let file: DistributionFile = read_json(path)?;
    file.to_distribution().map_err(|message| FormatError::Content {
        path: path.display().to_string(),
        message,
    })
}

#[derive(Serialize)]
struct SweepCsvRow {
    #[serde(rename = "delta_phi_L")]
    delta_phi_l: f64,
    #[serde(rename = "delta_phi_M")]
    delta_phi_m: f64,
    delta_alpha: f64,
    accepted: Option<u64>,
    rejected: Option<u64>,
    acceptance_rate: Option<f64>,
    additive_error: Option<f64>,
    additive_error_ci95: Option<f64>,
    status: String,
    schema_version: u32,
}

/// `ok`, `starved` or the error text.
fn status<T>(r: &Result<T, retrolab_core::samplers::SamplerError>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(retrolab_core::samplers::SamplerError::Starvation { .. }) => "starved".into(),
        Err(e) => format!("error: {e}"),
    }
}

/// Writes sweep rows as CSV.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        let point = row.result.as_ref().ok();
        w.serialize(SweepCsvRow {
            delta_phi_l: row.deltas.phi_l,
            delta_phi_m: row.deltas.phi_m,
            delta_alpha: row.deltas.alpha,
            accepted: point.map(|p| p.accepted),
            rejected: match &row.result {
                Ok(p) => Some(p.rejected),
                Err(retrolab_core::samplers::SamplerError::Starvation { trials, .. }) => Some(*trials),
                Err(_) => None,
            },
            acceptance_rate: point.map(|p| p.acceptance_rate),
            additive_error: point.map(|p| p.additive_error),
            additive_error_ci95: point.map(|p| p.additive_error_ci95),
            status: status(&row.result),
            schema_version: SCHEMA_VERSION,
        })?;
    }
    w.flush().map_err(|e| FormatError::Csv(e.into()))?;
    Ok(())
}

/// One setting of a double-Bell angle scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    /// Analyzer angles.
    pub thetas: [f64; 4],
    /// Outcome, as in a sweep.
    pub result: Result<retrolab_core::samplers::SweepPoint, retrolab_core::samplers::SamplerError>,
}

#[derive(Serialize)]
struct ScanCsvRow {
    theta1: f64,
    theta2: f64,
    theta3: f64,
    theta4: f64,
    accepted: Option<u64>,
    rejected: Option<u64>,
    acceptance_rate: Option<f64>,
    additive_error: Option<f64>,
    additive_error_ci95: Option<f64>,
    status: String,
    schema_version: u32,
}

/// Writes scan rows as CSV.
pub fn write_scan_csv<W: Write>(out: W, rows: &[ScanRow]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        let point = row.result.as_ref().ok();
        let [theta1, theta2, theta3, theta4] = row.thetas;
        w.serialize(ScanCsvRow {
            theta1,
            theta2,
            theta3,
            theta4,
            accepted: point.map(|p| p.accepted),
            rejected: point.map(|p| p.rejected),
            acceptance_rate: point.map(|p| p.acceptance_rate),
            additive_error: point.map(|p| p.additive_error),
            additive_error_ci95: point.map(|p| p.additive_error_ci95),
            status: status(&row.result),
            schema_version: SCHEMA_VERSION,
        })?;
    }
    w.flush().map_err(|e| FormatError::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use retrolab_core::circuits::{CircuitSpec, Deltas};

    #[test]
    fn distribution_round_trip() {
        let d = OutcomeDistribution::exact(2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let file = DistributionFile::from_distribution(&d);
        assert_eq!(file.probs.len(), 2);
        assert_eq!(file.to_distribution().unwrap(), d);
        let text = r#"{"n_bits": 1, "probs": {"0": 0.25, "1": 0.75}}"#;
        let parsed: DistributionFile = serde_json::from_str(text).unwrap();
        assert_eq!(parsed.schema_version, SCHEMA_VERSION);
        assert_eq!(parsed.to_distribution().unwrap().probs(), &[0.25, 0.75]);
    }

    #[test]
    fn distribution_rejects_bad_outcomes() {
        let wrong_width: DistributionFile = serde_json::from_str(r#"{"n_bits": 2, "probs": {"0": 1.0}}"#).unwrap();
        assert!(wrong_width.to_distribution().is_err());
        let not_bits: DistributionFile = serde_json::from_str(r#"{"n_bits": 1, "probs": {"x": 1.0}}"#).unwrap();
        assert!(not_bits.to_distribution().is_err());
    }

    #[test]
    fn model_and_circuit_round_trip() {
        let pair = CircuitSpec::double_bell_cnot([0.1, 0.2, 0.3, 0.4])
            .build(Deltas::equal(1e-2))
            .unwrap();
        let model = ModelFile::new(&pair.hv);
        let text = serde_json::to_string(&model).unwrap();
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_model().unwrap(), pair.hv);
        let circuit = CircuitFile::new(&pair.quantum, pair.input);
        let (q, input) = circuit.to_circuit().unwrap();
        assert_eq!((q, input), (pair.quantum, pair.input));
    }
}
