//! Fixed-length bitstrings used as outcome labels.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

/// Largest supported outcome width. Dense distributions over wider strings
/// stop being desk-scale.
pub const MAX_BITS: usize = 20;

/// An outcome bitstring of `len` bits.
///
/// Character `i` of the textual form is bit `i` (qubit / wire `i`); the packed
/// `value` stores bit `i` at position `len - 1 - i`, so lexicographic order of
/// the text equals numeric order of `value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bitstring {
    value: u32,
    len: u8,
}

/// Rejected bitstring text or width.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BitsError {
    /// A character other than `0` / `1`.
    #[error("invalid character {0:?} in bitstring")]
    InvalidChar(char),
    /// Wider than [`MAX_BITS`].
    #[error("bitstring of {0} bits exceeds the {MAX_BITS}-bit cap")]
    TooLong(usize),
}

impl Bitstring {
    /// Builds from the packed index. Panics if `len > MAX_BITS` or `value`
    /// does not fit in `len` bits.
    pub fn from_index(value: usize, len: usize) -> Self {
        assert!(len <= MAX_BITS, "bitstring width {len} over cap");
        assert!(value >> len == 0, "index {value} does not fit in {len} bits");
        Self {
            value: value as u32,
            len: len as u8,
        }
    }

    /// All-zero string.
    pub fn zeros(len: usize) -> Self {
        Self::from_index(0, len)
    }

    /// Builds from per-position bits, position 0 first.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut value = 0usize;
        for &b in bits {
            value = (value << 1) | b as usize;
        }
        Self::from_index(value, bits.len())
    }

    /// Packed index into a dense `2^len` table.
    pub fn index(self) -> usize {
        self.value as usize
    }

    /// Width in bits.
    pub fn len(self) -> usize {
        self.len as usize
    }

    /// True for the zero-width string.
    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    /// Bit at position `i` (0 = leftmost).
    pub fn bit(self, i: usize) -> bool {
        debug_assert!(i < self.len());
        (self.value >> (self.len() - 1 - i)) & 1 == 1
    }

    /// Copy with position `i` set to `b`.
    pub fn with_bit(self, i: usize, b: bool) -> Self {
        let mask = 1u32 << (self.len() - 1 - i);
        let value = if b { self.value | mask } else { self.value & !mask };
        Self { value, len: self.len }
    }

    /// Text form, position 0 first.
    pub fn to_text(self) -> String {
        (0..self.len()).map(|i| if self.bit(i) { '1' } else { '0' }).collect()
    }
}

impl FromStr for Bitstring {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut value = 0usize;
        let mut len = 0usize;
        for c in s.chars() {
            let b = match c {
                '0' => 0,
                '1' => 1,
                other => return Err(BitsError::InvalidChar(other)),
            };
            len += 1;
            if len > MAX_BITS {
                return Err(BitsError::TooLong(s.chars().count()));
            }
            value = (value << 1) | b;
        }
        Ok(Self::from_index(value, len))
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}
