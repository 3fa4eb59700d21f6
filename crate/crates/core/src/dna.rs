//! Nucleotides, quaternary words and the fixed bit-pair mapping.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gf2::BitVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Base {
    A = 0,
    C = 1,
    G = 2,
    T = 3,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::T];

    #[inline]
    pub fn from_index(i: u8) -> Base {
        Self::ALL[(i & 3) as usize]
    }

    #[inline]
    pub fn index(self) -> u8 {
        self as u8
    }

    /// Addition modulo 4, used by the pseudo-random offset.
    #[inline]
    pub fn shift(self, by: u8) -> Base {
        Base::from_index(self.index().wrapping_add(by) & 3)
    }

    #[inline]
    pub fn unshift(self, by: u8) -> Base {
        Base::from_index(self.index().wrapping_add(4 - (by & 3)) & 3)
    }

    pub fn to_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::T => 'T',
        }
    }

    pub fn from_char(c: char) -> Result<Base> {
        match c.to_ascii_uppercase() {
            'A' => Ok(Base::A),
            'C' => Ok(Base::C),
            'G' => Ok(Base::G),
            'T' => Ok(Base::T),
            other => Err(Error::InvalidArgument(format!(
                "not a nucleotide: {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// A DNA word. Whether it is a bare codeword, a marker-augmented payload or
/// a scrambled payload is tracked by the caller.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct QuaternaryWord(pub Vec<Base>);

impl QuaternaryWord {
    pub fn new(symbols: Vec<Base>) -> Self {
        Self(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Base] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = Base> + '_ {
        self.0.iter().copied()
    }

    pub fn concat(parts: &[&QuaternaryWord]) -> QuaternaryWord {
        QuaternaryWord(parts.iter().flat_map(|p| p.0.iter().copied()).collect())
    }
}

impl fmt::Display for QuaternaryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for QuaternaryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QuaternaryWord({self})")
    }
}

impl FromStr for QuaternaryWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(Base::from_char)
            .collect::<Result<Vec<_>>>()
            .map(QuaternaryWord)
    }
}

impl From<Vec<Base>> for QuaternaryWord {
    fn from(v: Vec<Base>) -> Self {
        Self(v)
    }
}

/// Pairs of bits to bases: 00→A, 01→C, 10→G, 11→T, first bit most significant.
pub fn bits_to_bases(word: &BitVec) -> Result<QuaternaryWord> {
    if !word.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "odd bit length {} cannot be mapped to bases",
            word.len()
        )));
    }
    Ok(QuaternaryWord(
        (0..word.len() / 2)
            .map(|i| {
                let hi = u8::from(word.get(2 * i));
                let lo = u8::from(word.get(2 * i + 1));
                Base::from_index(hi << 1 | lo)
            })
            .collect(),
    ))
}

pub fn bases_to_bits(word: &QuaternaryWord) -> BitVec {
    let mut out = BitVec::zeros(2 * word.len());
    for (i, b) in word.iter().enumerate() {
        out.set(2 * i, b.index() & 2 != 0);
        out.set(2 * i + 1, b.index() & 1 != 0);
    }
    out
}

/// Row index of a k-mer in lexicographic order (A < C < G < T).
pub fn kmer_index(bases: &[Base]) -> usize {
    bases
        .iter()
        .fold(0usize, |acc, b| acc * 4 + b.index() as usize)
}

/// Inverse of [`kmer_index`].
pub fn kmer_bases(mut index: usize, k: usize) -> Vec<Base> {
    let mut out = vec![Base::A; k];
    for slot in out.iter_mut().rev() {
        *slot = Base::from_index((index % 4) as u8);
        index /= 4;
    }
    out
}
