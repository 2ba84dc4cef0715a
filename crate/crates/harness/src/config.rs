//! Experiment configuration: defaults, JSON config files and validation.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use retrolab_core::circuits::{BuildOptions, CircuitId, CircuitSpec, Deltas};
use retrolab_core::samplers::{RejectionConfig, Strategy};
use serde::{Deserialize, Serialize};

use crate::formats::{self, FormatError};

/// Which version of the extended theory a run uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Causal: unconstrained readout, no rejection.
    TC,
    /// Finite tolerances with post-selection.
    #[default]
    TNl,
    /// The vanishing-delta limit, evaluated exactly.
    TEsLimit,
}

impl Variant {
    /// `t_c`, `t_nl` or `t_es_limit`.
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::TC => "t_c",
            Variant::TNl => "t_nl",
            Variant::TEsLimit => "t_es_limit",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "t_c" => Ok(Variant::TC),
            "t_nl" => Ok(Variant::TNl),
            "t_es_limit" => Ok(Variant::TEsLimit),
            _ => Err(format!("unknown variant {s:?} (expected t_c, t_nl or t_es_limit)")),
        }
    }
}

/// Sampling route for `t_nl` runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionStrategy {
    /// Literal trials.
    Naive,
    /// Collapsed proposals with exact acceptance.
    #[default]
    Collapsed,
}

impl From<RejectionStrategy> for Strategy {
    fn from(s: RejectionStrategy) -> Self {
        match s {
            RejectionStrategy::Naive => Strategy::Naive,
            RejectionStrategy::Collapsed => Strategy::Collapsed,
        }
    }
}

impl FromStr for RejectionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "naive" => Ok(RejectionStrategy::Naive),
            "collapsed" => Ok(RejectionStrategy::Collapsed),
            _ => Err(format!("unknown strategy {s:?} (expected naive or collapsed)")),
        }
    }
}

/// δφ_L, δφ_M and δα as stored in configs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltasConfig {
    /// Kick width.
    pub phi_l: f64,
    /// Measurement tolerance.
    pub phi_m: f64,
    /// Kick truncation.
    pub alpha: f64,
}

impl Default for DeltasConfig {
    fn default() -> Self {
        Self {
            phi_l: 1e-3,
            phi_m: 1e-3,
            alpha: 1e-3,
        }
    }
}

impl From<DeltasConfig> for Deltas {
    fn from(d: DeltasConfig) -> Self {
        Deltas {
            phi_l: d.phi_l,
            phi_m: d.phi_m,
            alpha: d.alpha,
        }
    }
}

/// Everything a run needs. Unset fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `malus`, `epr` or `double_bell_cnot`.
    pub circuit: String,
    /// Malus preparation bit.
    pub x: Option<bool>,
    /// Analyzer angle of wire 0.
    pub theta1: Option<f64>,
    /// Analyzer angle of wire 1 (the Malus analyzer).
    pub theta2: Option<f64>,
    /// Analyzer angle of wire 2.
    pub theta3: Option<f64>,
    /// Analyzer angle of wire 3.
    pub theta4: Option<f64>,
    /// Theory variant.
    pub variant: Variant,
    /// Kick and tolerance parameters.
    pub deltas: DeltasConfig,
    /// Master seed.
    pub seed: u64,
    /// Accepted samples (`t_nl`) or plain samples (`t_c`).
    pub samples: u64,
    /// Trial budget for `t_nl`; unset means 10^7 per accepted sample.
    pub max_trials: Option<u64>,
    /// Worker threads (and RNG chunks).
    pub workers: usize,
    /// Sampling route for `t_nl`.
    pub strategy: RejectionStrategy,
    /// Additional all-wire kick layers.
    pub extra_kick_layers: usize,
    /// EPR only: kick wire 0 alone.
    pub drop_second_kick: bool,
    /// Output directory; not part of serialized reports.
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            circuit: CircuitId::Malus.as_str().into(),
            x: None,
            theta1: None,
            theta2: None,
            theta3: None,
            theta4: None,
            variant: Variant::TNl,
            deltas: DeltasConfig::default(),
            seed: 0,
            samples: 100_000,
            max_trials: None,
            workers: 1,
            strategy: RejectionStrategy::Collapsed,
            extra_kick_layers: 0,
            drop_second_kick: false,
            out_dir: None,
        }
    }
}

/// An invalid configuration, reported with the offending field.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    /// A field holds an unusable value.
    #[error("invalid {field}: {message}")]
    Field {
        /// Field name.
        field: &'static str,
        /// What is wrong.
        message: String,
    },
    /// The config file could not be read.
    #[error(transparent)]
    File(#[from] FormatError),
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field,
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Reads a (possibly partial) config file.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Ok(formats::read_json(path)?)
    }

    /// Circuit id.
    pub fn circuit_id(&self) -> Result<CircuitId, ConfigError> {
        self.circuit
            .parse()
            .map_err(|e: retrolab_core::circuits::UnsupportedCircuit| {
                field(
                    "circuit",
                    format!(
                        "unsupported circuit {:?} (expected malus, epr or double_bell_cnot)",
                        e.0
                    ),
                )
            })
    }

    /// Checks the config and fills in the angles its circuit uses, so the
    /// result records every parameter of the run.
    pub fn resolve(&self) -> Result<Self, ConfigError> {
        let id = self.circuit_id()?;
        let mut out = self.clone();
        out.circuit = id.as_str().into();
        let named = [
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("theta3", self.theta3),
            ("theta4", self.theta4),
        ];
        let used: &[usize] = match id {
            CircuitId::Malus => &[1],
            CircuitId::Epr => &[0, 1],
            CircuitId::DoubleBellCnot => &[0, 1, 2, 3],
        };
        let mut thetas = [None; 4];
        for (i, (name, value)) in named.into_iter().enumerate() {
            match (used.contains(&i), value) {
                (true, v) => {
                    let v = v.unwrap_or(0.0);
                    if !v.is_finite() {
                        return Err(field(name, "must be finite"));
                    }
                    thetas[i] = Some(v);
                }
                (false, Some(_)) => return Err(field(name, format!("not used by circuit {id}"))),
                (false, None) => {}
            }
        }
        [out.theta1, out.theta2, out.theta3, out.theta4] = thetas;
        out.x = match (id, self.x) {
            (CircuitId::Malus, x) => Some(x.unwrap_or(false)),
            (_, Some(_)) => return Err(field("x", format!("not used by circuit {id}"))),
            (_, None) => None,
        };
        if self.drop_second_kick && id != CircuitId::Epr {
            return Err(field("drop_second_kick", "only applies to epr"));
        }
        if self.workers == 0 {
            return Err(field("workers", "must be at least 1"));
        }
        if self.variant != Variant::TEsLimit && self.samples == 0 {
            return Err(field("samples", "must be at least 1"));
        }
        if self.max_trials == Some(0) {
            return Err(field("max_trials", "must be at least 1"));
        }
        let d = self.deltas;
        match self.variant {
            Variant::TNl => {
                for (name, v) in [
                    ("deltas.phi_l", d.phi_l),
                    ("deltas.phi_m", d.phi_m),
                    ("deltas.alpha", d.alpha),
                ] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(field(name, "t_nl needs every delta > 0"));
                    }
                }
                if d.phi_m >= FRAC_PI_4 {
                    return Err(field("deltas.phi_m", "must be below π/4"));
                }
            }
            Variant::TC => {
                for (name, v) in [("deltas.phi_l", d.phi_l), ("deltas.alpha", d.alpha)] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(field(name, "t_c needs positive kick parameters"));
                    }
                }
            }
            Variant::TEsLimit => {}
        }
        Ok(out)
    }

    /// The circuit described by a resolved config.
    pub fn spec(&self) -> Result<CircuitSpec, ConfigError> {
        let id = self.circuit_id()?;
        let t = |v: Option<f64>| v.unwrap_or(0.0);
        let spec = match id {
            CircuitId::Malus => CircuitSpec::malus(self.x.unwrap_or(false), t(self.theta2)),
            CircuitId::Epr => CircuitSpec::epr(t(self.theta1), t(self.theta2)),
            CircuitId::DoubleBellCnot => {
                CircuitSpec::double_bell_cnot([t(self.theta1), t(self.theta2), t(self.theta3), t(self.theta4)])
            }
        };
        Ok(spec.with_options(BuildOptions {
            extra_kick_layers: self.extra_kick_layers,
            drop_second_kick: self.drop_second_kick,
        }))
    }

    /// Rejection options of a `t_nl` run.
    pub fn rejection(&self) -> RejectionConfig {
        RejectionConfig {
            strategy: self.strategy.into(),
            workers: self.workers,
            max_trials: self.max_trials,
        }
    }
}
