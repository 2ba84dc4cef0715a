//! Probability distributions over fixed-length bitstrings.

use alloc::vec;
use alloc::vec::Vec;

use crate::bits::{Bitstring, MAX_BITS};

/// Tolerance on the total mass of an exact distribution.
pub const EXACT_SUM_TOLERANCE: f64 = 1e-9;

/// Where the probabilities came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistributionKind {
    /// Computed, not sampled.
    Exact,
    /// Relative frequencies of `n_samples` draws.
    Empirical {
        /// Number of draws behind the frequencies.
        n_samples: u64,
    },
}

/// Invalid distribution data.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DistributionError {
    /// Wider than the dense-table cap.
    #[error("{0} outcome bits exceed the {MAX_BITS}-bit cap")]
    TooWide(usize),
    /// Table length is not `2^n_bits`, or operands differ in width.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch {
        /// Expected size or width.
        expected: usize,
        /// Supplied size or width.
        got: usize,
    },
    /// Negative or non-finite entry.
    #[error("invalid probability {value} for outcome index {index}")]
    InvalidProbability {
        /// Packed outcome index.
        index: usize,
        /// Offending value.
        value: f64,
    },
    /// Entries do not sum to one.
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    /// Frequencies requested from zero draws.
    #[error("no samples")]
    NoSamples,
}

/// A probability distribution over `n_bits`-bit outcomes, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    n_bits: usize,
    probs: Vec<f64>,
    kind: DistributionKind,
}

impl OutcomeDistribution {
    /// Exact distribution from a dense table indexed by [`Bitstring::index`].
    pub fn exact(n_bits: usize, probs: Vec<f64>) -> Result<Self, DistributionError> {
        check_width(n_bits, probs.len())?;
        let mut total = 0.0;
        for (index, &value) in probs.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(DistributionError::InvalidProbability { index, value });
            }
            total += value;
        }
        if crate::math::abs(total - 1.0) > EXACT_SUM_TOLERANCE {
            return Err(DistributionError::NotNormalized(total));
        }
        Ok(Self {
            n_bits,
            probs,
            kind: DistributionKind::Exact,
        })
    }

    /// Exact distribution from `(outcome, probability)` pairs; unlisted
    /// outcomes get zero. Repeated outcomes accumulate.
    pub fn from_sparse<I>(n_bits: usize, entries: I) -> Result<Self, DistributionError>
    where
        I: IntoIterator<Item = (Bitstring, f64)>,
    {
        if n_bits > MAX_BITS {
            return Err(DistributionError::TooWide(n_bits));
        }
        let mut probs = vec![0.0; 1 << n_bits];
        for (b, p) in entries {
            if b.len() != n_bits {
                return Err(DistributionError::DimensionMismatch {
                    expected: n_bits,
                    got: b.len(),
                });
            }
            probs[b.index()] += p;
        }
        Self::exact(n_bits, probs)
    }

    /// Empirical frequencies from a dense count table.
    pub fn from_counts(n_bits: usize, counts: &[u64]) -> Result<Self, DistributionError> {
        check_width(n_bits, counts.len())?;
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(DistributionError::NoSamples);
        }
        let probs = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Ok(Self {
            n_bits,
            probs,
            kind: DistributionKind::Empirical { n_samples: n },
        })
    }

    /// Outcome width.
    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    /// Exact or empirical.
    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    /// Draw count for empirical distributions.
    pub fn n_samples(&self) -> Option<u64> {
        match self.kind {
            DistributionKind::Exact => None,
            DistributionKind::Empirical { n_samples } => Some(n_samples),
        }
    }

    /// Probability of one outcome.
    pub fn prob(&self, outcome: Bitstring) -> f64 {
        self.probs[outcome.index()]
    }

    /// Dense table indexed by [`Bitstring::index`].
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Outcomes with non-zero probability, in index order.
    pub fn support(&self) -> impl Iterator<Item = (Bitstring, f64)> + '_ {
        let n = self.n_bits;
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(i, &p)| (Bitstring::from_index(i, n), p))
    }

    /// Total probability of outcomes whose bits satisfy `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(Bitstring) -> bool) -> f64 {
        self.support().filter(|(b, _)| pred(*b)).map(|(_, p)| p).sum()
    }

    /// Probability that all bits agree (all zeros or all ones).
    pub fn prob_all_equal(&self) -> f64 {
        let ones = (1usize << self.n_bits) - 1;
        self.probs[0] + if self.n_bits > 0 { self.probs[ones] } else { 0.0 }
    }
}

fn check_width(n_bits: usize, len: usize) -> Result<(), DistributionError> {
    if n_bits > MAX_BITS {
        return Err(DistributionError::TooWide(n_bits));
    }
    if len != 1 << n_bits {
        return Err(DistributionError::DimensionMismatch {
            expected: 1 << n_bits,
            got: len,
        });
    }
    Ok(())
}
