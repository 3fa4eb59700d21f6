//! Position-dependent pseudo-random offset (addition mod 4).
//!
//! The offset stream is SplitMix64: the state advances by
//! `0x9E3779B97F4A7C15`, each output is mixed with the multipliers
//! `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB` (shifts 30, 27, 31), and the
//! symbol for a position is the top two bits of its output.

use crate::dna::QuaternaryWord;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Offset symbols (0..4), one per payload position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetStream(pub Vec<u8>);

impl OffsetStream {
    pub fn from_seed(seed: u64, len: usize) -> Self {
        let mut state = seed;
        Self(
            (0..len)
                .map(|_| (splitmix64(&mut state) >> 62) as u8)
                .collect(),
        )
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    #[inline]
    pub fn at(&self, pos: usize) -> u8 {
        self.0[pos]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Panics if the stream is shorter than the word.
pub fn apply_offset(word: &QuaternaryWord, stream: &OffsetStream) -> QuaternaryWord {
    assert!(stream.len() >= word.len(), "offset stream too short");
    QuaternaryWord(
        word.iter()
            .zip(&stream.0)
            .map(|(b, &o)| b.shift(o))
            .collect(),
    )
}

pub fn remove_offset(word: &QuaternaryWord, stream: &OffsetStream) -> QuaternaryWord {
    assert!(stream.len() >= word.len(), "offset stream too short");
    QuaternaryWord(
        word.iter()
            .zip(&stream.0)
            .map(|(b, &o)| b.unshift(o))
            .collect(),
    )
}
