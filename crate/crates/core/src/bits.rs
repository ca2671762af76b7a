//! Fixed-length binary sequences held by one party.

use crate::error::{Error, Result};

/// A fixed-length bit string, packed into 64-bit words.
///
/// Reads beyond `len` return 0, which is the padding convention used by the
/// data-loading oracles: an index register wider than the data loads bit 0
/// for the padded indices.
#[derive(Clone, PartialEq, Eq)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl std::fmt::Debug for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVector[")?;
        for i in 0..self.len.min(64) {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        if self.len > 64 {
            write!(f, "... len={}", self.len)?;
        }
        write!(f, "]")
    }
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            words: vec![0u64; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut v = BitVector::zeros(len);
        for i in 0..len {
            v.set(i, f(i));
        }
        v
    }

    /// Parse a slice of 0/1 integers; anything else is a usage error.
    pub fn from_binary_ints(values: &[u8]) -> Result<Self> {
        let mut v = BitVector::zeros(values.len());
        for (i, &b) in values.iter().enumerate() {
            match b {
                0 => {}
                1 => v.set(i, true),
                other => {
                    return Err(Error::Usage(format!(
                        "bit vector entry {i} is {other}, expected 0 or 1"
                    )))
                }
            }
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit at `i`; positions at or beyond `len` read 0.
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        if i >= self.len {
            return false;
        }
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Number of positions where both vectors are 1. Lengths must match.
    pub fn and_count(&self, other: &BitVector) -> u64 {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| u64::from((a & b).count_ones()))
            .sum()
    }

    /// Hamming distance. Lengths must match.
    pub fn xor_count(&self, other: &BitVector) -> u64 {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| u64::from((a ^ b).count_ones()))
            .sum()
    }

    pub fn complement(&self) -> Self {
        BitVector::from_fn(self.len, |i| !self.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_reads_zero() {
        let v = BitVector::from_bools(&[true, false, true]);
        assert!(v.get(0));
        assert!(!v.get(1));
        assert!(v.get(2));
        assert!(!v.get(3));
        assert!(!v.get(1000));
    }

    #[test]
    fn counts() {
        let a = BitVector::from_bools(&[true, false, true, false]);
        let b = BitVector::from_bools(&[true, true, false, false]);
        assert_eq!(a.count_ones(), 2);
        assert_eq!(a.and_count(&b), 1);
        assert_eq!(a.xor_count(&b), 2);
        assert!(!a.is_zero());
        assert!(BitVector::zeros(100).is_zero());
    }

    #[test]
    fn complement_roundtrip() {
        let a = BitVector::from_fn(130, |i| i % 3 == 0);
        assert_eq!(a.complement().complement(), a);
        assert_eq!(a.xor_count(&a.complement()), 130);
    }

    #[test]
    fn rejects_non_binary() {
        assert!(BitVector::from_binary_ints(&[0, 1, 2]).is_err());
    }
}
