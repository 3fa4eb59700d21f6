use super::{CodeSpec, PlacedRow};
use crate::error::{Error, Result};
use crate::gf2::{self, BitVec};

/// Parity-check matrix H; codewords are the words `x` with `x·Hᵀ = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    pub rows: Vec<BitVec>,
    pub n_cols: usize,
}

impl ParityCheckMatrix {
    pub fn new(rows: Vec<BitVec>, n_cols: usize) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::LengthMismatch {
                expected: n_cols,
                actual: bad.len(),
            });
        }
        Ok(Self { rows, n_cols })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rank(&self) -> usize {
        gf2::rank(&self.rows, self.n_cols)
    }

    /// Row indices with a 1 in column `col`, i.e. the support of `h_col`.
    pub fn column(&self, col: usize) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&r| self.rows[r].get(col))
            .collect()
    }

    pub fn syndrome(&self, word: &BitVec) -> Result<BitVec> {
        if word.len() != self.n_cols {
            return Err(Error::LengthMismatch {
                expected: self.n_cols,
                actual: word.len(),
            });
        }
        let mut s = BitVec::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            s.set(i, row.dot(word));
        }
        Ok(s)
    }

    pub fn is_codeword(&self, word: &BitVec) -> Result<bool> {
        Ok(self.syndrome(word)?.is_zero())
    }
}

fn place(row: &PlacedRow, at: usize, n_cols: usize) -> BitVec {
    let mut v = BitVec::zeros(n_cols);
    for i in row.bits.ones() {
        v.set(at + i, true);
    }
    v
}

/// Expands head rows, every complete template instance, then tail rows.
pub fn build_parity_check(spec: &CodeSpec) -> Result<ParityCheckMatrix> {
    spec.validate()?;
    let n = spec.n_bits;
    let mut rows: Vec<BitVec> = spec.head_rows.iter().map(|r| place(r, r.col, n)).collect();
    let mut block = 0;
    loop {
        let base = block * spec.c;
        let fitting: Vec<&PlacedRow> = spec
            .template_rows
            .iter()
            .filter(|r| base + r.end() <= n)
            .collect();
        if fitting.len() < spec.template_rows.len() || fitting.is_empty() {
            break;
        }
        rows.extend(fitting.iter().map(|r| place(r, base + r.col, n)));
        block += 1;
    }
    rows.extend(spec.tail_rows.iter().map(|r| place(r, r.col, n)));
    ParityCheckMatrix::new(rows, n)
}

/// Kernel basis of H with the message bits sitting at the free columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub basis: Vec<BitVec>,
    pub free_columns: Vec<usize>,
    pub n_cols: usize,
}

impl Generator {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Reads the message back out of a codeword (the free columns).
    pub fn message_of(&self, codeword: &BitVec) -> BitVec {
        let mut m = BitVec::zeros(self.free_columns.len());
        for (i, &col) in self.free_columns.iter().enumerate() {
            m.set(i, codeword.get(col));
        }
        m
    }
}

pub fn derive_generator(h: &ParityCheckMatrix) -> Generator {
    let (basis, free_columns) = gf2::kernel_basis(&h.rows, h.n_cols);
    Generator {
        basis,
        free_columns,
        n_cols: h.n_cols,
    }
}

pub fn encode(message: &BitVec, g: &Generator) -> Result<BitVec> {
    if message.len() != g.dimension() {
        return Err(Error::LengthMismatch {
            expected: g.dimension(),
            actual: message.len(),
        });
    }
    let mut out = BitVec::zeros(g.n_cols);
    for i in message.ones() {
        out.xor_assign(&g.basis[i]);
    }
    Ok(out)
}
