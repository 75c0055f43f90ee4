use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Computational-basis label of an N-qubit register.
///
/// Character `i` of the textual form is qubit `i + 1`; `'0'` and `'1'` are the
/// eigenstates of sigma_z with eigenvalues +1 and -1. Qubit 0 is packed into the
/// most significant bit of the first word, so the derived ordering matches the
/// lexicographic order of the strings.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    len: usize,
    words: Vec<u64>,
}

const WORD: usize = 64;

impl Bitstring {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    pub fn ones(len: usize) -> Self {
        Self::from_fn(len, |_| true)
    }

    pub fn from_fn(len: usize, mut bit: impl FnMut(usize) -> bool) -> Self {
        let mut out = Self::zeros(len);
        for i in 0..len {
            if bit(i) {
                out.set(i, true);
            }
        }
        out
    }

    /// Builds the bitstring whose dense index is `index` (qubit 0 most significant).
    pub fn from_index(index: usize, len: usize) -> Self {
        Self::from_fn(len, |i| (index >> (len - 1 - i)) & 1 == 1)
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
        (self.words[i / WORD] >> (WORD - 1 - i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (WORD - 1 - i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    /// Number of qubits in `|1>` (the excitation number).
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        let tail = self.len % WORD;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= !0u64 << (WORD - tail);
            }
        }
        Self {
            len: self.len,
            words,
        }
    }

    /// Bitwise XOR; both strings must have the same length.
    pub fn xor(&self, other: &Bitstring) -> Self {
        debug_assert_eq!(self.len, other.len);
        Self {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        }
    }

    /// Dense index with qubit 0 as the most significant bit, if it fits in `usize`.
    pub fn to_index(&self) -> Option<usize> {
        if self.len >= usize::BITS as usize {
            return None;
        }
        Some((0..self.len).fold(0usize, |acc, i| (acc << 1) | self.get(i) as usize))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{self}>")
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => out.set(i, true),
                _ => return Err(Error::InvalidBitstring(s.to_string())),
            }
        }
        Ok(out)
    }
}
