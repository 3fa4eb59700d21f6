//! Dense bit vectors and the little GF(2) linear algebra the codebook needs.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Fixed-length vector over GF(2), packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
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
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn last_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

impl BitVec {
    /// Hex digits, first bit most significant, zero-padded to whole nibbles.
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(self.len.div_ceil(4));
        for chunk in 0..self.len.div_ceil(4) {
            let mut nibble = 0u32;
            for k in 0..4 {
                let i = chunk * 4 + k;
                nibble = nibble << 1 | (i < self.len && self.get(i)) as u32;
            }
            out.push(char::from_digit(nibble, 16).unwrap_or('0'));
        }
        out
    }

    /// Inverse of [`BitVec::to_hex`] for a word of `len` bits.
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let hex = hex.trim();
        if hex.len() != len.div_ceil(4) {
            return Err(Error::InvalidArgument(format!(
                "{len} bits need {} hex digits, got {}",
                len.div_ceil(4),
                hex.len()
            )));
        }
        let mut v = Self::zeros(len);
        for (chunk, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::InvalidArgument(format!("not a hex digit: {c:?}")))?;
            for k in 0..4 {
                let i = chunk * 4 + k;
                let bit = nibble >> (3 - k) & 1 == 1;
                if i < len {
                    v.set(i, bit);
                } else if bit {
                    return Err(Error::InvalidArgument(
                        "hex padding bits must be zero".into(),
                    ));
                }
            }
        }
        Ok(v)
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl FromStr for BitVec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidArgument(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self::from_bits(&bits))
    }
}

/// Reduced row echelon form of a set of rows, pivots chosen leftmost-first.
#[derive(Debug, Clone)]
pub struct Echelon {
    pub rows: Vec<BitVec>,
    pub pivots: Vec<usize>,
}

/// Gauss-Jordan elimination over GF(2). Zero rows are dropped, so
/// `rows.len()` of the result is the rank.
pub fn rref(rows: &[BitVec], n_cols: usize) -> Echelon {
    let mut work: Vec<BitVec> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..n_cols {
        let Some(found) = (rank..work.len()).find(|&r| work[r].get(col)) else {
            continue;
        };
        work.swap(rank, found);
        let pivot_row = work[rank].clone();
        for (r, row) in work.iter_mut().enumerate() {
            if r != rank && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == work.len() {
            break;
        }
    }
    work.truncate(rank);
    Echelon { rows: work, pivots }
}

pub fn rank(rows: &[BitVec], n_cols: usize) -> usize {
    rref(rows, n_cols).rows.len()
}

/// Basis of `{x : r·x = 0 for every row r}`, one vector per free column in
/// ascending column order. Each basis vector has a single 1 among the free
/// columns, so message bits sit verbatim at the free positions.
pub fn kernel_basis(rows: &[BitVec], n_cols: usize) -> (Vec<BitVec>, Vec<usize>) {
    let ech = rref(rows, n_cols);
    let mut is_pivot = vec![false; n_cols];
    for &p in &ech.pivots {
        is_pivot[p] = true;
    }
    let free: Vec<usize> = (0..n_cols).filter(|&c| !is_pivot[c]).collect();
    let basis = free
        .iter()
        .map(|&f| {
            let mut v = BitVec::unit(n_cols, f);
            for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
                if row.get(f) {
                    v.set(p, true);
                }
            }
            v
        })
        .collect();
    (basis, free)
}
