//! Packed bit-vectors used as measurement labels and avoidance-set members.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fixed-length bit string, packed into 64-bit blocks.
///
/// Bit `0` is the least significant bit of the first block. `Display` and
/// `FromStr` render the most significant bit first, so the textual order of
/// `from_index(v, d)` matches the numeric order of `v`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitString {
    len: usize,
    blocks: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "bit string length must be positive");
        BitString {
            len,
            blocks: vec![0; len.div_ceil(64)],
        }
    }

    /// Encodes `value` in `len` bits (bit `i` of `value` becomes bit `i`).
    pub fn from_index(value: u64, len: usize) -> Self {
        assert!(
            len >= 64 || value < (1u64 << len),
            "value {value} does not fit in {len} bits"
        );
        let mut s = Self::zeros(len);
        s.blocks[0] = value;
        s
    }

    /// The numeric value of the string, when it fits in a `u64`.
    pub fn index(&self) -> Option<u64> {
        if self.blocks.iter().skip(1).any(|&b| b != 0) {
            return None;
        }
        Some(self.blocks[0])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.blocks[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.blocks[i / 64] |= mask;
        } else {
            self.blocks[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.blocks[i / 64] ^= 1u64 << (i % 64);
    }

    /// Number of set bits.
    pub fn weight(&self) -> u32 {
        self.blocks.iter().map(|b| b.count_ones()).sum()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        self.check_len(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitString {
            len: self.len,
            blocks,
        })
    }

    pub fn complement(&self) -> BitString {
        let mut blocks: Vec<u64> = self.blocks.iter().map(|b| !b).collect();
        mask_tail(&mut blocks, self.len);
        BitString {
            len: self.len,
            blocks,
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut blocks: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.gen()).collect();
        mask_tail(&mut blocks, len);
        BitString { len, blocks }
    }

    fn check_len(&self, other: &BitString) -> Result<()> {
        if self.len != other.len {
            return Err(Error::invalid(format!(
                "bit string length mismatch: {} vs {}",
                self.len, other.len
            )));
        }
        Ok(())
    }
}

fn mask_tail(blocks: &mut [u64], len: usize) {
    let used = len % 64;
    if used != 0 {
        if let Some(last) = blocks.last_mut() {
            *last &= (1u64 << used) - 1;
        }
    }
}

/// Hamming distance between two equal-length bit strings.
pub fn hamming(x: &BitString, y: &BitString) -> Result<u32> {
    x.check_len(y)?;
    Ok(x.blocks
        .iter()
        .zip(&y.blocks)
        .map(|(a, b)| (a ^ b).count_ones())
        .sum())
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.len).rev() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::invalid("empty bit string"));
        }
        let mut bs = BitString::zeros(s.len());
        for (pos, ch) in s.chars().enumerate() {
            let i = s.len() - 1 - pos;
            match ch {
                '0' => {}
                '1' => bs.set(i, true),
                other => {
                    return Err(Error::invalid(format!(
                        "invalid character {other:?} in bit string"
                    )))
                }
            }
        }
        Ok(bs)
    }
}
