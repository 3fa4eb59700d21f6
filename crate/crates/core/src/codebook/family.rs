//! Reconstruction of terminated convolutional codes from `(c, b, nu)` and
//! target lengths.
//!
//! Each of the `c - b` template rows spans `m + 1` blocks of `c` columns
//! (`m = nu / (c - b)`), with a parity identity in its last block. Every
//! placement of the template that overlaps `[0, n_bits)` is kept, clipped to
//! the word: left-clipped placements become head rows, right-clipped ones
//! tail rows. If the kernel is still larger than the requested message
//! length, trailing positions are pinned to zero with unit tail rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CodeSpec, PlacedRow};
use crate::dna::Base;
use crate::error::{Error, Result};
use crate::gf2::{self, BitVec};

#[derive(Debug, Clone)]
pub struct SlidingWindowParams {
    pub identifier: String,
    pub c: usize,
    pub b: usize,
    pub nu: usize,
    pub n_bits: usize,
    pub message_bits: usize,
    pub marker_period: usize,
    pub marker_symbol: Vec<Base>,
    pub scrambler_seed: u64,
    pub template_seed: u64,
}

fn random_template(c: usize, b: usize, blocks: usize, seed: u64) -> Vec<BitVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = blocks * c;
    let last = (blocks - 1) * c;
    (0..c - b)
        .map(|i| loop {
            let mut row = BitVec::zeros(width);
            for col in 0..width {
                row.set(col, rng.random_bool(0.5));
            }
            for p in 0..c - b {
                row.set(last + b + p, p == i);
            }
            // The row must reach back into its first block so that it spans
            // exactly `blocks` blocks.
            if blocks == 1 || (0..c).any(|col| row.get(col)) {
                break row;
            }
        })
        .collect()
}

fn clip(row: &BitVec, start: isize, n_bits: usize) -> Option<PlacedRow> {
    let mut first = None;
    let mut last = 0;
    for i in row.ones() {
        let col = start + i as isize;
        if col >= 0 && (col as usize) < n_bits {
            first.get_or_insert(col as usize);
            last = col as usize;
        }
    }
    let first = first?;
    let mut bits = BitVec::zeros(last - first + 1);
    for i in row.ones() {
        let col = start + i as isize;
        if col >= first as isize && col as usize <= last {
            bits.set(col as usize - first, true);
        }
    }
    Some(PlacedRow { col: first, bits })
}

pub fn sliding_window_code(p: &SlidingWindowParams) -> Result<CodeSpec> {
    if p.b >= p.c || p.c == 0 {
        return Err(Error::Config(format!("need b < c, got ({}, {})", p.c, p.b)));
    }
    let redundancy = p.c - p.b;
    let m = p.nu / redundancy;
    let blocks = m + 1;
    let template = random_template(p.c, p.b, blocks, p.template_seed);
    let n = p.n_bits;
    let n_blocks = n.div_ceil(p.c) as isize;

    let mut head_rows = Vec::new();
    let mut tail_rows = Vec::new();
    let mut full_instances = 0;
    for s in -(m as isize)..n_blocks {
        let start = s * p.c as isize;
        let fits = s >= 0 && start as usize + blocks * p.c <= n;
        if fits {
            full_instances += 1;
            continue;
        }
        let target = if s < 0 {
            &mut head_rows
        } else {
            &mut tail_rows
        };
        target.extend(template.iter().filter_map(|row| clip(row, start, n)));
    }

    let template_rows: Vec<PlacedRow> = if full_instances > 0 {
        template
            .iter()
            .map(|bits| PlacedRow {
                col: 0,
                bits: bits.clone(),
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut spec = CodeSpec {
        identifier: p.identifier.clone(),
        c: p.c,
        b: p.b,
        nu: p.nu,
        n_bits: n,
        template_rows,
        head_rows,
        tail_rows,
        marker_period: p.marker_period,
        marker_symbol: p.marker_symbol.clone(),
        scrambler_seed: p.scrambler_seed,
        message_bits: None,
        reconstructed: true,
    };

    let h = super::build_parity_check(&spec)?;
    let target_rank = n.checked_sub(p.message_bits).ok_or_else(|| {
        Error::Config(format!(
            "message of {} bits exceeds n_bits {n}",
            p.message_bits
        ))
    })?;
    let mut rows = h.rows;
    let mut rank = gf2::rank(&rows, n);
    if rank > target_rank {
        return Err(Error::Config(format!(
            "{}: structural rank {rank} already exceeds n_bits - message_bits = {target_rank}",
            p.identifier
        )));
    }
    let mut col = n;
    while rank < target_rank && col > 0 {
        col -= 1;
        rows.push(BitVec::unit(n, col));
        let r = gf2::rank(&rows, n);
        if r > rank {
            rank = r;
            spec.tail_rows.push(PlacedRow {
                col,
                bits: BitVec::unit(1, 0),
            });
        } else {
            rows.pop();
        }
    }
    spec.message_bits = Some(p.message_bits);
    Ok(spec)
}

/// Parameters behind the shipped configs for the published code tables.
/// Lengths are reconstructed from message and payload lengths.
pub fn table_code_params() -> Vec<SlidingWindowParams> {
    let rows: [(&str, usize, usize, usize, usize, usize, usize); 12] = [
        ("CCM10-7", 13, 12, 10, 222, 170, 7),
        ("CCM10-6", 13, 12, 10, 222, 166, 6),
        ("CCM10-5", 13, 12, 10, 196, 140, 5),
        ("CCM9-5", 9, 8, 9, 190, 134, 5),
        ("CCM10-4", 11, 10, 10, 170, 112, 4),
        ("CCM9-14", 4, 3, 9, 212, 150, 14),
        ("CC6-5", 6, 5, 6, 224, 172, 0),
        ("CC8-5", 6, 5, 8, 226, 172, 0),
        ("CC11-5", 6, 5, 11, 230, 172, 0),
        ("CC6-3", 4, 3, 6, 228, 157, 0),
        ("CC8-3", 4, 3, 8, 230, 156, 0),
        ("CC11-3", 4, 3, 11, 234, 156, 0),
    ];
    rows.iter()
        .enumerate()
        .map(
            |(i, &(id, c, b, nu, n_bits, k, period))| SlidingWindowParams {
                identifier: id.to_string(),
                c,
                b,
                nu,
                n_bits,
                message_bits: k,
                marker_period: period,
                marker_symbol: vec![Base::A],
                scrambler_seed: 0x5EED_0000 + i as u64,
                template_seed: 0x7E11_0000 + i as u64,
            },
        )
        .collect()
}
