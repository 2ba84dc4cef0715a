//! Desk-scale laboratory for retro-causal hidden-variable models.
//!
//! The crate pairs an exact statevector simulator ([`qsim`]) with executable
//! Schulman-style hidden-variable circuits ([`hvmodel`]), samples the causal
//! and post-selected variants of those circuits ([`samplers`]), and scores
//! the agreement with the additive and multiplicative sampling-error metrics
//! of post-selection sampling classes ([`metrics`]). [`circuits`] builds the
//! paired quantum / hidden-variable instances for the Malus, EPR and
//! double-Bell-with-CNOT systems.
//!
//! Everything here is `no_std` + `alloc`. Threads, files and the CLI live in
//! the `retrolab` companion crate.

#![cfg_attr(not(test), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod bits;
pub mod circuits;
pub mod distribution;
pub mod hvmodel;
pub mod math;
pub mod metrics;
pub mod qsim;
pub mod rng;
pub mod samplers;

pub use bits::Bitstring;
pub use distribution::{DistributionError, DistributionKind, OutcomeDistribution};
