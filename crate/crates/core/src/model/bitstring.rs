use std::fmt;
use std::ops::Range;

use bitvec::prelude::*;
use rand::Rng;

use crate::{Error, Result};

/// Fixed-length string of bits, most significant bit first.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bitstring(BitVec<u8, Msb0>);

impl Bitstring {
    pub fn zeros(len: usize) -> Self {
        Bitstring(BitVec::repeat(false, len))
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Bitstring((0..len).map(|_| rng.random::<bool>()).collect())
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Bitstring(bits.into_iter().collect())
    }

    /// Parses a string of `'0'`/`'1'` characters; anything else is ignored.
    pub fn from_bin_str(s: &str) -> Self {
        Self::from_bits(s.chars().filter_map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        }))
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        Bitstring(BitVec::from_slice(bytes))
    }

    /// The `len` low-order bits of `index`, most significant first.
    pub fn from_index(index: usize, len: usize) -> Self {
        Self::from_bits((0..len).rev().map(|i| (index >> i) & 1 == 1))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).map(|b| *b)
    }

    pub fn count_ones(&self) -> usize {
        self.0.count_ones()
    }

    pub fn is_zero(&self) -> bool {
        self.0.not_any()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().by_vals()
    }

    /// Interprets the bits as an unsigned integer, most significant first.
    pub fn to_index(&self) -> usize {
        self.iter().fold(0usize, |acc, b| (acc << 1) | b as usize)
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        Bitstring(self.0[range].to_bitvec())
    }

    /// Splits into `count` equal consecutive pieces.
    pub fn split_equal(&self, count: usize) -> Result<Vec<Bitstring>> {
        if count == 0 || !self.len().is_multiple_of(count) {
            return Err(Error::BadLength {
                len: self.len(),
                divisor: count,
            });
        }
        let piece = self.len() / count;
        Ok((0..count)
            .map(|i| self.slice(i * piece..(i + 1) * piece))
            .collect())
    }

    pub fn concat<'a, I: IntoIterator<Item = &'a Bitstring>>(parts: I) -> Self {
        let mut out = BitVec::new();
        for p in parts {
            out.extend_from_bitslice(&p.0);
        }
        Bitstring(out)
    }

    pub fn xor(&self, other: &Bitstring) -> Result<Bitstring> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let mut out = self.0.clone();
        out ^= other.0.as_bitslice();
        Ok(Bitstring(out))
    }

    /// Packed bytes, zero-padded in the last byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = self.0.clone();
        v.set_uninitialized(false);
        v.into_vec()
    }

    pub fn is_byte_aligned(&self) -> bool {
        self.len().is_multiple_of(8)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    /// Inverse of [`Bitstring::to_hex`] given the original bit length.
    pub fn from_hex(s: &str, len: usize) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Parse(e.to_string()))?;
        if bytes.len() * 8 < len {
            return Err(Error::Parse(format!(
                "hex string holds {} bits, need {len}",
                bytes.len() * 8
            )));
        }
        let mut bits: BitVec<u8, Msb0> = BitVec::from_vec(bytes);
        bits.truncate(len);
        Ok(Bitstring(bits))
    }
}

/// XOR of several equal-length bitstrings.
pub fn xor_all<'a, I: IntoIterator<Item = &'a Bitstring>>(items: I) -> Result<Bitstring> {
    let mut iter = items.into_iter();
    let first = iter.next().ok_or(Error::WrongPartCount {
        expected: 1,
        found: 0,
    })?;
    iter.try_fold(first.clone(), |acc, b| acc.xor(b))
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstring({})", self)
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 64 {
            for b in self.iter() {
                f.write_str(if b { "1" } else { "0" })?;
            }
            Ok(())
        } else {
            write!(f, "{}b:{}", self.len(), self.to_hex())
        }
    }
}
