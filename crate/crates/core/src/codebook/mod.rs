//! Convolutional codes given by parity-check templates, plus the marker and
//! scrambling layers that turn codewords into synthesizable payloads.

mod config;
mod family;
mod markers;
mod parity;
mod scramble;

pub use config::{parse_code_config, write_code_config};
pub use family::{sliding_window_code, table_code_params, SlidingWindowParams};
pub use markers::{insert_markers, marker_count, marker_positions, strip_markers};
pub use parity::{build_parity_check, derive_generator, encode, Generator, ParityCheckMatrix};
pub use scramble::{apply_offset, remove_offset, OffsetStream};

use crate::dna::{bases_to_bits, bits_to_bases, Base, QuaternaryWord};
use crate::error::{Error, Result};
use crate::gf2::BitVec;

/// One explicit parity-check row: `bits` placed starting at column `col`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedRow {
    pub col: usize,
    pub bits: BitVec,
}

impl PlacedRow {
    pub fn new(col: usize, bits: &str) -> Result<Self> {
        Ok(Self {
            col,
            bits: bits.parse()?,
        })
    }

    pub fn end(&self) -> usize {
        self.col + self.bits.len()
    }
}

/// A terminated `(c, b, nu)` convolutional code with optional markers.
///
/// Template rows are relative to the start of a block of `c` columns and are
/// repeated for every block in which they fit completely. Head and tail rows
/// are absolute and supply the boundary structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpec {
    pub identifier: String,
    pub c: usize,
    pub b: usize,
    pub nu: usize,
    pub n_bits: usize,
    pub template_rows: Vec<PlacedRow>,
    pub head_rows: Vec<PlacedRow>,
    pub tail_rows: Vec<PlacedRow>,
    /// Payload symbols between markers; 0 disables markers.
    pub marker_period: usize,
    /// Marker sequence, before the pseudo-random offset is applied.
    pub marker_symbol: Vec<Base>,
    pub scrambler_seed: u64,
    /// Expected message length, checked against the rank of H when present.
    pub message_bits: Option<usize>,
    /// Set for configs whose lengths were inferred rather than published.
    pub reconstructed: bool,
}

impl CodeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.c == 0 || self.b >= self.c {
            return Err(Error::Config(format!(
                "need 0 <= b < c, got b={} c={}",
                self.b, self.c
            )));
        }
        if self.n_bits == 0 || !self.n_bits.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n_bits must be positive and even, got {}",
                self.n_bits
            )));
        }
        if !self.template_rows.is_empty() && self.template_rows.len() != self.c - self.b {
            return Err(Error::Config(format!(
                "template has {} rows, expected c - b = {}",
                self.template_rows.len(),
                self.c - self.b
            )));
        }
        for row in self.template_rows.iter() {
            if row.bits.is_empty() || row.end() > self.n_bits {
                return Err(Error::Config(format!(
                    "template row {}:{} does not fit in {} columns",
                    row.col, row.bits, self.n_bits
                )));
            }
        }
        for row in self.head_rows.iter().chain(&self.tail_rows) {
            if row.end() > self.n_bits {
                return Err(Error::Config(format!(
                    "boundary row {}:{} extends past column {}",
                    row.col, row.bits, self.n_bits
                )));
            }
        }
        if self.marker_period > 0 && self.marker_symbol.is_empty() {
            return Err(Error::Config(
                "marker period set without a marker symbol".into(),
            ));
        }
        Ok(())
    }

    pub fn codeword_symbols(&self) -> usize {
        self.n_bits / 2
    }

    /// Length of the synthesized payload: codeword symbols plus markers.
    pub fn payload_symbols(&self) -> usize {
        let l = self.codeword_symbols();
        l + marker_count(l, self.marker_period) * self.marker_symbol.len()
    }

    pub fn syndrome_bound_exponent(&self) -> usize {
        self.c - self.b + self.nu
    }

    pub fn has_markers(&self) -> bool {
        marker_count(self.codeword_symbols(), self.marker_period) > 0
    }
}

/// A code ready for use: its spec, parity-check matrix and encoder.
#[derive(Debug, Clone)]
pub struct Code {
    pub spec: CodeSpec,
    pub h: ParityCheckMatrix,
    pub generator: Generator,
}

impl Code {
    pub fn new(spec: CodeSpec) -> Result<Self> {
        let h = build_parity_check(&spec)?;
        let generator = derive_generator(&h);
        if let Some(k) = spec.message_bits {
            if k != generator.dimension() {
                return Err(Error::Config(format!(
                    "{}: message_bits = {k} but H has a kernel of dimension {}",
                    spec.identifier,
                    generator.dimension()
                )));
            }
        }
        Ok(Self { spec, h, generator })
    }

    pub fn message_bits(&self) -> usize {
        self.generator.dimension()
    }

    /// Message bits over twice the number of synthesized payload symbols.
    pub fn rate(&self) -> f64 {
        self.message_bits() as f64 / (2 * self.spec.payload_symbols()) as f64
    }

    /// Message → codeword → bases → markers → offset.
    pub fn payload_for_message(&self, message: &BitVec) -> Result<QuaternaryWord> {
        self.payload_for_codeword(&encode(message, &self.generator)?)
    }

    /// Codeword → bases → markers → offset.
    pub fn payload_for_codeword(&self, codeword: &BitVec) -> Result<QuaternaryWord> {
        if !self.h.is_codeword(codeword)? {
            return Err(Error::InvalidArgument("word is not a codeword".into()));
        }
        let bases = bits_to_bases(codeword)?;
        let marked = if self.spec.has_markers() {
            insert_markers(&bases, self.spec.marker_period, &self.spec.marker_symbol)?
        } else {
            bases
        };
        Ok(apply_offset(&marked, &self.offset_stream(marked.len())))
    }

    /// Inverse of [`Code::payload_for_message`] for a codeword payload; the
    /// result is the raw bit word (check it with [`ParityCheckMatrix::is_codeword`]).
    pub fn codeword_from_payload(&self, payload: &QuaternaryWord) -> Result<BitVec> {
        if payload.len() != self.spec.payload_symbols() {
            return Err(Error::LengthMismatch {
                expected: self.spec.payload_symbols(),
                actual: payload.len(),
            });
        }
        let plain = remove_offset(payload, &self.offset_stream(payload.len()));
        let bare = if self.spec.has_markers() {
            strip_markers(&plain, self.spec.marker_period, &self.spec.marker_symbol)?
        } else {
            plain
        };
        Ok(bases_to_bits(&bare))
    }

    pub fn message_from_payload(&self, payload: &QuaternaryWord) -> Result<BitVec> {
        let word = self.codeword_from_payload(payload)?;
        Ok(self.generator.message_of(&word))
    }

    pub fn offset_stream(&self, len: usize) -> OffsetStream {
        OffsetStream::from_seed(self.spec.scrambler_seed, len)
    }
}

/// The small worked example code: (4, 2, 3), ten bits.
pub const EXAMPLE_CONFIG: &str = include_str!("../../configs/example-4-2-3.code");

/// Code configs shipped with the crate, as `(file name, contents)`.
pub const SHIPPED_CONFIGS: &[(&str, &str)] = &[
    ("example-4-2-3.code", EXAMPLE_CONFIG),
    ("ccm10-7.code", include_str!("../../configs/ccm10-7.code")),
    ("ccm10-6.code", include_str!("../../configs/ccm10-6.code")),
    ("ccm10-5.code", include_str!("../../configs/ccm10-5.code")),
    ("ccm9-5.code", include_str!("../../configs/ccm9-5.code")),
    ("ccm10-4.code", include_str!("../../configs/ccm10-4.code")),
    ("ccm9-14.code", include_str!("../../configs/ccm9-14.code")),
    ("cc6-5.code", include_str!("../../configs/cc6-5.code")),
    ("cc8-5.code", include_str!("../../configs/cc8-5.code")),
    ("cc11-5.code", include_str!("../../configs/cc11-5.code")),
    ("cc6-3.code", include_str!("../../configs/cc6-3.code")),
    ("cc8-3.code", include_str!("../../configs/cc8-3.code")),
    ("cc11-3.code", include_str!("../../configs/cc11-3.code")),
];

pub fn example_spec() -> CodeSpec {
    parse_code_config(EXAMPLE_CONFIG).expect("shipped example config parses")
}

pub fn shipped_specs() -> Result<Vec<CodeSpec>> {
    SHIPPED_CONFIGS
        .iter()
        .map(|(_, text)| parse_code_config(text))
        .collect()
}

pub fn shipped_spec(identifier: &str) -> Option<CodeSpec> {
    shipped_specs()
        .ok()?
        .into_iter()
        .find(|s| s.identifier.eq_ignore_ascii_case(identifier))
}
