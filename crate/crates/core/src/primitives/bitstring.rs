use std::fmt;

use rand::Rng;

use crate::error::{invalid, Result};

/// Fixed-length string of bits, bit `i` being wire `i` (0-based).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(invalid!("bit strings must have positive length"));
        }
        Ok(Self { len, words: vec![0; len.div_ceil(64)] })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut s = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => s.set(i, true),
                _ => return Err(invalid!("bit {i} is {b}, expected 0 or 1")),
            }
        }
        Ok(s)
    }

    /// Low `len` bits of `word`; higher bits must be clear.
    pub fn from_word(word: u64, len: usize) -> Result<Self> {
        if len == 0 || len > 64 {
            return Err(invalid!("word-backed bit strings need 1..=64 bits, got {len}"));
        }
        if len < 64 && word >> len != 0 {
            return Err(invalid!("word {word:#x} does not fit in {len} bits"));
        }
        Ok(Self { len, words: vec![word] })
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        let mut s = Self::zeros(len)?;
        for w in s.words.iter_mut() {
            *w = rng.random();
        }
        s.mask_tail();
        Ok(s)
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The value as a single word, when it fits.
    pub fn to_word(&self) -> Option<u64> {
        (self.len <= 64).then(|| self.words[0])
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    /// Bits `start..start + width` packed little-endian into words.
    pub fn segment(&self, start: usize, width: usize) -> Vec<u64> {
        assert!(start + width <= self.len, "segment {start}+{width} exceeds length {}", self.len);
        let mut out = vec![0u64; width.div_ceil(64).max(1)];
        for j in 0..width {
            if self.get(start + j) {
                out[j / 64] |= 1u64 << (j % 64);
            }
        }
        out
    }

    /// Overwrites bits `start..start + width` with the low bits of `value`.
    pub fn set_segment(&mut self, start: usize, width: usize, value: &[u64]) {
        for j in 0..width {
            self.set(start + j, (value[j / 64] >> (j % 64)) & 1 == 1);
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_access() {
        let s = BitString::from_bits(&[1, 0, 1]).unwrap();
        assert_eq!(s.to_word(), Some(0b101));
        assert_eq!(s.to_string(), "101");
        assert!(BitString::from_bits(&[2]).is_err());
        assert!(BitString::zeros(0).is_err());
        assert!(BitString::from_word(8, 3).is_err());
    }

    #[test]
    fn segments_cross_word_boundaries() {
        let mut s = BitString::zeros(130).unwrap();
        s.set(63, true);
        s.set(64, true);
        s.set(129, true);
        assert_eq!(s.segment(62, 4), vec![0b0110]);
        let mut t = BitString::zeros(130).unwrap();
        t.set_segment(62, 4, &[0b0110]);
        assert_eq!(t.segment(62, 4), s.segment(62, 4));
        assert_eq!(s.segment(60, 70)[1] >> 5, 0b1);
    }
}
