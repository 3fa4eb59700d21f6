//! Beam-search decoding of a cropped probability matrix, restricted to
//! sequences of the form `left primer ‖ payload ‖ right primer` whose payload
//! labels a path of the (offset, optionally marker-augmented) quaternary
//! syndrome trellis.
//!
//! A beam walks through the read one unit at a time: it either dwells on
//! the current unit (CTC: a blank, or a repeat when the previous column was
//! not blank) or extends to the next base. Inside the payload the only
//! permitted extensions are the outgoing edges of the beam's trellis state,
//! so every surviving hypothesis is a codeword prefix.

use rustc_hash::FxHashMap;

use crate::channel::{LogMatrix, MatrixKind, ProbabilityMatrix, BLANK};
use crate::codebook::{Code, OffsetStream};
use crate::dna::{kmer_index, Base, QuaternaryWord};
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::primerseek::{log_add, seek, SeekParams};
use crate::trellis::{Alphabet, SyndromeTrellis};

/// How identical beams are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeRule {
    /// Log-sum-exp of the members.
    Sum,
    /// Keep the best member only (Viterbi).
    Max,
}

/// What makes two beams identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeKey {
    /// Region progress, trellis state, blank flag and current unit; beams
    /// with different payload prefixes merge.
    Syndrome,
    /// As above, plus the payload prefix: merges only pool alignments of
    /// one sequence, so with unlimited beams the search is exact.
    Prefix,
}

/// Which finished beams may be reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Any column; the best score per consumed column wins.
    BestNormalized,
    /// Only beams that end on the last column.
    LastColumn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeParams {
    /// Beams kept per column.
    pub w: usize,
    pub merge: MergeRule,
    pub key: MergeKey,
    pub termination: Termination,
    /// Mean unit duration in columns. Every column costs `ln(1 - 1/d)` for
    /// staying on a unit (CTC: a blank or a repeat) or `ln(1/d)` for moving
    /// on. All complete alignments ending on one column pay the same total,
    /// so the codeword ranking there is unchanged; what changes is that
    /// partial hypotheses which explain noisy columns with extra units no
    /// longer outscore the truth and crowd it out of the beam. `None`
    /// scores both moves as free.
    pub dwell_prior: Option<f64>,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            w: 512,
            merge: MergeRule::Sum,
            key: MergeKey::Syndrome,
            termination: Termination::BestNormalized,
            dwell_prior: Some(10.0),
        }
    }
}

impl DecodeParams {
    pub fn with_beams(w: usize) -> Self {
        Self {
            w,
            ..Self::default()
        }
    }

    /// Log costs of staying and of moving on.
    fn move_costs(&self) -> Result<(f64, f64)> {
        match self.dwell_prior {
            None => Ok((0.0, 0.0)),
            Some(d) if d >= 1.0 => Ok(((1.0 - 1.0 / d).ln(), (1.0 / d).ln())),
            Some(d) => Err(Error::InvalidArgument(format!("dwell_prior {d} < 1"))),
        }
    }

    /// Total duration cost of an alignment that enters `units` units over
    /// `columns` columns; adding it to a channel log probability gives the
    /// decoder's score for that alignment.
    pub fn duration_logprior(&self, units: usize, columns: usize) -> Result<f64> {
        if units > columns {
            return Ok(f64::NEG_INFINITY);
        }
        let (stay, step) = self.move_costs()?;
        Ok(units as f64 * step + (columns - units) as f64 * stay)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Payload as read (offset and markers still applied).
    pub payload_symbols: QuaternaryWord,
    /// Decoded message; `None` when decoding failed.
    pub message_bits: Option<BitVec>,
    /// `logprob / columns consumed`; `-inf` on failure.
    pub score: f64,
    pub logprob: f64,
    pub accepted: bool,
    pub beam_extensions: u64,
    /// Matrix columns processed.
    pub columns: usize,
    /// Last column of the reported alignment.
    pub end_column: Option<usize>,
    /// Primer estimate used for cropping (pipeline only).
    pub position: Option<usize>,
}

impl DecodeResult {
    fn failure(beam_extensions: u64, columns: usize) -> Self {
        Self {
            payload_symbols: QuaternaryWord::default(),
            message_bits: None,
            score: f64::NEG_INFINITY,
            logprob: f64::NEG_INFINITY,
            accepted: false,
            beam_extensions,
            columns,
            end_column: None,
            position: None,
        }
    }

    pub fn failed(&self) -> bool {
        self.message_bits.is_none()
    }
}

/// Columns `[primer_pos, end)`.
pub fn crop_matrix(p: &ProbabilityMatrix, primer_pos: usize) -> Result<ProbabilityMatrix> {
    p.crop(primer_pos)
}

/// Sets the accepted flag. Failed decodes are never accepted.
pub fn accept(mut r: DecodeResult, threshold: f64) -> DecodeResult {
    r.accepted = !r.failed() && r.score >= threshold;
    r
}

const NO_NODE: u32 = u32::MAX;

/// Payload prefixes as a tree; equal sequences share one node.
#[derive(Default)]
struct PrefixArena {
    nodes: Vec<(u32, u8)>,
    lookup: FxHashMap<(u32, u8), u32>,
}

impl PrefixArena {
    fn intern(&mut self, parent: u32, base: u8) -> u32 {
        *self.lookup.entry((parent, base)).or_insert_with(|| {
            self.nodes.push((parent, base));
            (self.nodes.len() - 1) as u32
        })
    }
}

/// The read layout a decoder walks through.
#[derive(Debug, Clone)]
pub struct ReadModel<'a> {
    trellis: &'a SyndromeTrellis,
    offset: OffsetStream,
    left: Vec<u8>,
    right: Vec<u8>,
    kind: MatrixKind,
    zero_state: u32,
}

#[derive(Debug, Clone, Copy)]
struct Beam {
    logp: f64,
    /// Probability of the kept prefix alone; `logp` also includes the
    /// mass of other prefixes merged into this beam.
    lead: f64,
    /// Bases committed so far, primers included.
    pos: u32,
    /// State index at the current trellis level.
    state: u32,
    /// Current unit row (CTC: base row; KMER: k-mer row).
    row: u32,
    /// CTC: last column was blank. Also marks a beam that has not
    /// emitted anything yet.
    blank: bool,
    /// Interned payload prefix.
    prefix: u32,
}

impl Beam {
    fn emit(&self, e: f64) -> Beam {
        Beam {
            logp: self.logp + e,
            lead: self.lead + e,
            ..*self
        }
    }

    /// Merges an identical beam. Alignments of the same prefix pool their
    /// probability; otherwise the prefix with more probability is kept.
    fn absorb(&mut self, other: &Beam, merge: MergeRule) {
        let pool = |a: f64, b: f64| match merge {
            MergeRule::Sum => log_add(a, b),
            MergeRule::Max => a.max(b),
        };
        self.logp = pool(self.logp, other.logp);
        if other.prefix == self.prefix {
            self.lead = pool(self.lead, other.lead);
        } else if other.lead > self.lead {
            self.lead = other.lead;
            self.prefix = other.prefix;
        }
    }

    fn key(&self, with_prefix: bool) -> (u64, u32) {
        let packed = (self.pos as u64) << 40
            | (self.state as u64) << 16
            | (self.row as u64) << 1
            | self.blank as u64;
        (packed, if with_prefix { self.prefix } else { 0 })
    }
}

/// Outcome of one beam search, before any code-specific mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDecode {
    pub payload: Option<Vec<Base>>,
    pub logprob: f64,
    pub score: f64,
    pub end_column: Option<usize>,
    pub beam_extensions: u64,
}

impl<'a> ReadModel<'a> {
    pub fn new(
        trellis: &'a SyndromeTrellis,
        offset: OffsetStream,
        left: &QuaternaryWord,
        right: &QuaternaryWord,
        kind: MatrixKind,
    ) -> Result<Self> {
        if trellis.alphabet != Alphabet::Quaternary {
            return Err(Error::InvalidArgument(
                "decoder needs a quaternary trellis".into(),
            ));
        }
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidArgument("primers must be nonempty".into()));
        }
        if offset.len() < trellis.n_sections() {
            return Err(Error::LengthMismatch {
                expected: trellis.n_sections(),
                actual: offset.len(),
            });
        }
        if let MatrixKind::Kmer(k) = kind {
            if !(1..=6).contains(&k) || left.len() < k {
                return Err(Error::InvalidArgument(format!(
                    "k = {k} needs 1 <= k <= 6 and a left primer of at least k bases"
                )));
            }
        }
        if trellis.max_states() >= 1 << 24 {
            return Err(Error::InvalidArgument(
                "trellis too wide for the decoder".into(),
            ));
        }
        let zero_state = trellis
            .state_index(0, 0)
            .ok_or(Error::NotACodeword { level: 0 })? as u32;
        Ok(Self {
            trellis,
            offset,
            left: left.iter().map(Base::index).collect(),
            right: right.iter().map(Base::index).collect(),
            kind,
            zero_state,
        })
    }

    fn payload_len(&self) -> usize {
        self.trellis.n_sections()
    }

    fn total(&self) -> usize {
        self.left.len() + self.payload_len() + self.right.len()
    }

    /// k-1 context bases of the row mask; 1 for CTC (unused).
    fn ctx_modulus(&self) -> u32 {
        match self.kind {
            MatrixKind::Ctc5 => 1,
            MatrixKind::Kmer(k) => 4u32.pow(k as u32 - 1),
        }
    }

    fn root(&self) -> Beam {
        let (pos, row) = match self.kind {
            MatrixKind::Ctc5 => (0, BLANK as u32),
            MatrixKind::Kmer(k) => {
                let ctx: Vec<Base> = self.left[..k - 1]
                    .iter()
                    .map(|&b| Base::from_index(b))
                    .collect();
                (k - 1, kmer_index(&ctx) as u32)
            }
        };
        Beam {
            logp: 0.0,
            lead: 0.0,
            pos: pos as u32,
            state: self.zero_state,
            row,
            blank: true,
            prefix: NO_NODE,
        }
    }

    /// Bases (with next state index) a beam at `pos` in `state` may extend
    /// by. Payload labels are offset by the position's offset symbol.
    pub fn extensions(&self, pos: usize, state: usize) -> Vec<(Base, usize)> {
        let lp = self.left.len();
        let m = self.payload_len();
        if pos < lp {
            vec![(Base::from_index(self.left[pos]), state)]
        } else if pos < lp + m {
            let t = pos - lp;
            let section = &self.trellis.sections[t];
            (0..4)
                .filter_map(|x| {
                    section
                        .edge(state, x)
                        .map(|next| (Base::from_index(x as u8).shift(self.offset.at(t)), next))
                })
                .collect()
        } else if pos < self.total() {
            vec![(Base::from_index(self.right[pos - lp - m]), state)]
        } else {
            Vec::new()
        }
    }

    fn in_payload(&self, pos: usize) -> bool {
        pos >= self.left.len() && pos < self.left.len() + self.payload_len()
    }

    fn unit_row(&self, beam: &Beam, base: Base) -> u32 {
        match self.kind {
            MatrixKind::Ctc5 => 1 + base.index() as u32,
            MatrixKind::Kmer(_) => (beam.row % self.ctx_modulus()) * 4 + base.index() as u32,
        }
    }

    /// Runs the beam search over every column of `lp`.
    pub fn run(&self, lp: &LogMatrix, params: &DecodeParams) -> Result<RawDecode> {
        if params.w == 0 {
            return Err(Error::InvalidArgument("w must be at least 1".into()));
        }
        if lp.q() != self.kind.q() {
            return Err(Error::InvalidArgument(format!(
                "matrix has {} rows, decoder expects {}",
                lp.q(),
                self.kind.q()
            )));
        }
        let ctc = self.kind == MatrixKind::Ctc5;
        let (stay, step) = params.move_costs()?;
        let total = self.total() as u32;
        let t_cols = lp.t();
        let mut prefixes = PrefixArena::default();
        let mut beams = vec![self.root()];
        let mut children: Vec<Beam> = Vec::new();
        let mut index: FxHashMap<(u64, u32), usize> = FxHashMap::default();
        let with_prefix = params.key == MergeKey::Prefix;
        let mut extensions = 0u64;
        let mut best: Option<(f64, f64, usize, u32)> = None;
        let merge = params.merge;

        for j in 0..t_cols {
            children.clear();
            index.clear();
            for b in &beams {
                let mut offer = |c: Beam| {
                    extensions += 1;
                    if c.logp == f64::NEG_INFINITY {
                        return;
                    }
                    let key = c.key(with_prefix);
                    match index.get(&key) {
                        Some(&i) => children[i].absorb(&c, merge),
                        None => {
                            index.insert(key, children.len());
                            children.push(c);
                        }
                    }
                };
                // Dwell children.
                if ctc {
                    let e = lp.get(BLANK, j);
                    offer(Beam {
                        blank: true,
                        ..b.emit(e + stay)
                    });
                }
                if !b.blank {
                    offer(b.emit(lp.get(b.row as usize, j) + stay));
                }
                // Extend children.
                if b.pos < total {
                    let record = self.in_payload(b.pos as usize);
                    for (base, next) in self.extensions(b.pos as usize, b.state as usize) {
                        let row = self.unit_row(b, base);
                        if ctc && !b.blank && row == b.row {
                            continue;
                        }
                        let prefix = if record {
                            prefixes.intern(b.prefix, base.index())
                        } else {
                            b.prefix
                        };
                        offer(Beam {
                            pos: b.pos + 1,
                            state: next as u32,
                            row,
                            blank: false,
                            prefix,
                            ..b.emit(lp.get(row as usize, j) + step)
                        });
                    }
                }
            }
            if children.is_empty() {
                break;
            }
            if children.len() > params.w {
                children.select_nth_unstable_by(params.w - 1, |a, b| b.logp.total_cmp(&a.logp));
                children.truncate(params.w);
            }
            let eligible = match params.termination {
                Termination::BestNormalized => true,
                Termination::LastColumn => j + 1 == t_cols,
            };
            if eligible {
                // Finished beams of one column differ only in the blank flag;
                // they are combined like any other merge.
                let mut done = children.iter().filter(|c| c.pos == total);
                if let Some(first) = done.next() {
                    let mut end = *first;
                    for c in done {
                        end.absorb(c, merge);
                    }
                    let score = end.logp / (j + 1) as f64;
                    if best.is_none_or(|(s, ..)| score > s) {
                        best = Some((score, end.logp, j, end.prefix));
                    }
                }
            }
            std::mem::swap(&mut beams, &mut children);
        }

        Ok(match best {
            None => RawDecode {
                payload: None,
                logprob: f64::NEG_INFINITY,
                score: f64::NEG_INFINITY,
                end_column: None,
                beam_extensions: extensions,
            },
            Some((score, logprob, end, mut node)) => {
                let mut payload = Vec::with_capacity(self.payload_len());
                while node != NO_NODE {
                    let (parent, base) = prefixes.nodes[node as usize];
                    payload.push(Base::from_index(base));
                    node = parent;
                }
                payload.reverse();
                RawDecode {
                    payload: Some(payload),
                    logprob,
                    score,
                    end_column: Some(end),
                    beam_extensions: extensions,
                }
            }
        })
    }
}

/// Decodes a matrix whose first column is the left primer's first unit.
pub fn decode(
    p: &ProbabilityMatrix,
    code: &Code,
    trellis: &SyndromeTrellis,
    left: &QuaternaryWord,
    right: &QuaternaryWord,
    params: &DecodeParams,
) -> Result<DecodeResult> {
    if trellis.n_sections() != code.spec.payload_symbols() {
        return Err(Error::LengthMismatch {
            expected: code.spec.payload_symbols(),
            actual: trellis.n_sections(),
        });
    }
    let model = ReadModel::new(
        trellis,
        code.offset_stream(trellis.n_sections()),
        left,
        right,
        p.kind(),
    )?;
    let raw = model.run(&p.log_matrix(), params)?;
    let Some(payload) = raw.payload else {
        return Ok(DecodeResult::failure(raw.beam_extensions, p.t()));
    };
    let payload = QuaternaryWord(payload);
    let message = code.message_from_payload(&payload)?;
    Ok(DecodeResult {
        payload_symbols: payload,
        message_bits: Some(message),
        score: raw.score,
        logprob: raw.logprob,
        accepted: true,
        beam_extensions: raw.beam_extensions,
        columns: p.t(),
        end_column: raw.end_column,
        position: None,
    })
}

/// Everything needed to decode reads of one code.
#[derive(Debug, Clone)]
pub struct Pipeline<'a> {
    pub code: &'a Code,
    pub trellis: &'a SyndromeTrellis,
    pub left: &'a QuaternaryWord,
    pub right: &'a QuaternaryWord,
    pub seek: SeekParams,
    pub decode: DecodeParams,
    pub threshold: f64,
}

/// Seek, crop, decode, accept.
pub fn decode_pipeline(p: &ProbabilityMatrix, pipe: &Pipeline) -> Result<DecodeResult> {
    let found = seek(p, pipe.left, &pipe.seek)?;
    let Some(position) = found.position else {
        let mut r = DecodeResult::failure(found.beam_extensions, 0);
        r.position = None;
        return Ok(r);
    };
    let cropped = crop_matrix(p, position)?;
    let mut r = decode(
        &cropped,
        pipe.code,
        pipe.trellis,
        pipe.left,
        pipe.right,
        &pipe.decode,
    )?;
    r.position = Some(position);
    Ok(accept(r, pipe.threshold))
}
