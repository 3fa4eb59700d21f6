use crate::dna::{Base, QuaternaryWord};
use crate::error::{Error, Result};

/// Number of marker insertions for a word of `len` symbols: one after every
/// full block of `period` symbols, including a final block that ends the word.
pub fn marker_count(len: usize, period: usize) -> usize {
    len.checked_div(period).unwrap_or(0)
}

/// Positions (in the marked word) occupied by marker symbols.
pub fn marker_positions(len: usize, period: usize, marker_len: usize) -> Vec<usize> {
    (1..=marker_count(len, period))
        .flat_map(|j| {
            let start = j * period + (j - 1) * marker_len;
            start..start + marker_len
        })
        .collect()
}

pub fn insert_markers(
    word: &QuaternaryWord,
    period: usize,
    marker: &[Base],
) -> Result<QuaternaryWord> {
    if period == 0 {
        return Err(Error::InvalidArgument(
            "marker period must be positive".into(),
        ));
    }
    let n = marker_count(word.len(), period);
    let mut out = Vec::with_capacity(word.len() + n * marker.len());
    for chunk in word.symbols().chunks(period) {
        out.extend_from_slice(chunk);
        if chunk.len() == period {
            out.extend_from_slice(marker);
        }
    }
    Ok(QuaternaryWord(out))
}

/// Inverse of [`insert_markers`]. Marker positions are dropped without
/// checking their content.
pub fn strip_markers(
    word: &QuaternaryWord,
    period: usize,
    marker: &[Base],
) -> Result<QuaternaryWord> {
    if period == 0 {
        return Err(Error::InvalidArgument(
            "marker period must be positive".into(),
        ));
    }
    let m = marker.len();
    // Solve L + m * floor(L / period) = word.len() for L.
    let total = word.len();
    let bare_len = (0..=total)
        .find(|&l| l + m * marker_count(l, period) == total)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "length {total} is not a marked length for period {period}"
            ))
        })?;
    let mut out = Vec::with_capacity(bare_len);
    let mut pos = 0;
    while out.len() < bare_len {
        let take = period.min(bare_len - out.len());
        out.extend_from_slice(&word.symbols()[pos..pos + take]);
        pos += take;
        if take == period {
            pos += m;
        }
    }
    Ok(QuaternaryWord(out))
}
