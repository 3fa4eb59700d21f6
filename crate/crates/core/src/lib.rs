//! Decoding of convolutionally coded DNA payloads straight from nanopore
//! probability matrices, guided by a syndrome trellis.

// `!(x >= lo)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codebook;
pub mod dna;
pub mod error;
pub mod gf2;
pub mod harness;
pub mod oracle;
pub mod primerseek;
pub mod synde;
pub mod trellis;

pub use error::{Error, Result};
