//! Synthetic stand-in for a basecaller: turns a DNA string into a
//! column-stochastic probability matrix under a dwell and noise model.
//!
//! Two layouts are supported. `Ctc5` has rows `blank, A, C, G, T`; every
//! base occupies a run of columns followed by one blank column. `Kmer(k)` has
//! one row per k-mer in lexicographic order and no blanks.

use std::fmt::Write as _;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp1, Geometric};

use crate::dna::{kmer_index, Base, QuaternaryWord};
use crate::error::{Error, Result};

pub const BLANK: usize = 0;

/// Row of base `b` in a CTC5 matrix.
#[inline]
pub fn ctc_row(b: Base) -> usize {
    1 + b.index() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Ctc5,
    Kmer(usize),
}

impl MatrixKind {
    pub fn q(self) -> usize {
        match self {
            MatrixKind::Ctc5 => 5,
            MatrixKind::Kmer(k) => 1 << (2 * k),
        }
    }
}

/// Q x T matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    kind: MatrixKind,
    t: usize,
    data: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn new(kind: MatrixKind, data: Vec<f64>) -> Result<Self> {
        let q = kind.q();
        if !data.len().is_multiple_of(q) {
            return Err(Error::InvalidArgument(format!(
                "{} entries do not form columns of height {q}",
                data.len()
            )));
        }
        let m = Self {
            kind,
            t: data.len() / q,
            data,
        };
        for j in 0..m.t {
            let col = m.column(j);
            if col.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "column {j} has a negative or NaN entry"
                )));
            }
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("column {j} sums to {sum}")));
            }
        }
        Ok(m)
    }

    /// Every column uniform.
    pub fn uniform(kind: MatrixKind, t: usize) -> Self {
        let q = kind.q();
        Self {
            kind,
            t,
            data: vec![1.0 / q as f64; q * t],
        }
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn q(&self) -> usize {
        self.kind.q()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let q = self.q();
        &self.data[j * q..(j + 1) * q]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.q() + row]
    }

    /// Natural logarithms of all entries, same layout.
    pub fn log_matrix(&self) -> LogMatrix {
        LogMatrix {
            q: self.q(),
            t: self.t,
            data: self.data.iter().map(|v| v.ln()).collect(),
        }
    }

    /// Columns `[from, t)`.
    pub fn crop(&self, from: usize) -> Result<Self> {
        if from >= self.t {
            return Err(Error::InvalidArgument(format!(
                "crop position {from} outside 0..{}",
                self.t
            )));
        }
        Ok(Self {
            kind: self.kind,
            t: self.t - from,
            data: self.data[from * self.q()..].to_vec(),
        })
    }

    /// `PMAT v1` text.
    pub fn to_pmat(&self) -> String {
        let (kind, k) = match self.kind {
            MatrixKind::Ctc5 => ("CTC5", 0),
            MatrixKind::Kmer(k) => ("KMER", k),
        };
        let mut out = format!("PMAT v1 kind={kind} k={k} q={} t={}\n", self.q(), self.t);
        for j in 0..self.t {
            let line: Vec<String> = self.column(j).iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_pmat(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty matrix file".into(),
        })?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("PMAT") || fields.next() != Some("v1") {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header `PMAT v1 ...`".into(),
            });
        }
        let (mut kind, mut k, mut q, mut t) = (None, 0usize, None, None);
        for field in fields {
            let (key, value) = field.split_once('=').ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("bad header field {field:?}"),
            })?;
            let num = || {
                value.parse::<usize>().map_err(|e| Error::Parse {
                    line: 1,
                    msg: format!("{key}: {e}"),
                })
            };
            match key {
                "kind" => kind = Some(value.to_string()),
                "k" => k = num()?,
                "q" => q = Some(num()?),
                "t" => t = Some(num()?),
                _ => {
                    return Err(Error::Parse {
                        line: 1,
                        msg: format!("unknown header field {key:?}"),
                    })
                }
            }
        }
        let kind = match kind.as_deref() {
            Some("CTC5") => MatrixKind::Ctc5,
            Some("KMER") if k >= 1 => MatrixKind::Kmer(k),
            other => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("unsupported kind {other:?} (k={k})"),
                })
            }
        };
        let q_expected = kind.q();
        if q.is_some_and(|q| q != q_expected) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("q must be {q_expected} for this kind"),
            });
        }
        let t = t.ok_or(Error::Parse {
            line: 1,
            msg: "missing t".into(),
        })?;
        let mut data = Vec::with_capacity(t * q_expected);
        for (idx, line) in lines {
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })?);
            }
            if data.len() - before != q_expected {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {q_expected} values"),
                });
            }
        }
        if data.len() != t * q_expected {
            return Err(Error::LengthMismatch {
                expected: t,
                actual: data.len() / q_expected,
            });
        }
        Self::new(kind, data)
    }
}

/// Log-domain copy of a matrix, for the search code.
#[derive(Debug, Clone)]
pub struct LogMatrix {
    q: usize,
    t: usize,
    data: Vec<f64>,
}

impl LogMatrix {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.q + row]
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn q(&self) -> usize {
        self.q
    }
}

/// Column span of every truth unit (base for CTC5, k-mer for KMER).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub spans: Vec<Range<usize>>,
}

impl Alignment {
    /// `ALN v1` text; each line is `truth_index col_start col_end` with an
    /// inclusive end.
    pub fn to_aln(&self) -> String {
        let mut out = String::from("ALN v1\n");
        for (i, r) in self.spans.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {}", r.start, r.end - 1);
        }
        out
    }

    pub fn from_aln(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "ALN v1" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "expected header `ALN v1`".into(),
                })
            }
        }
        let mut spans = Vec::new();
        for (idx, line) in lines {
            let f: Vec<usize> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e: std::num::ParseIntError| Error::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })?;
            if f.len() != 3 || f[0] != spans.len() || f[2] < f[1] {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "expected `index start end` in order".into(),
                });
            }
            spans.push(f[1]..f[2] + 1);
        }
        Ok(Self { spans })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    /// Mean of the geometric dwell, in raw samples per truth unit.
    pub mean_dwell: f64,
    /// Raw samples per matrix column.
    pub stride: usize,
    /// Mean probability mass moved off the intended row per column.
    pub noise_eps: f64,
    /// Mass moved from the base row to the blank row in CTC base columns.
    pub blank_mass: f64,
    /// Per-base chance of a dropped (deletion-like) or doubled
    /// (insertion-like) emission, split evenly.
    pub indel_prob: f64,
    pub seed: u64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            mean_dwell: 10.0,
            stride: 1,
            noise_eps: 0.0,
            blank_mass: 0.0,
            indel_prob: 0.0,
            seed: 0,
        }
    }
}

impl ChannelParams {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Moderate column noise with a little blank leakage; the default
    /// noisy setting for experiments.
    pub fn r9_like(seed: u64) -> Self {
        Self {
            noise_eps: 0.05,
            blank_mass: 0.05,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_dwell >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "mean_dwell {} < 1",
                self.mean_dwell
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.noise_eps) {
            return Err(Error::InvalidArgument(format!(
                "noise_eps {} not in [0,1)",
                self.noise_eps
            )));
        }
        if !(0.0..1.0).contains(&self.blank_mass) || self.noise_eps + self.blank_mass >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "blank_mass {} must leave mass on the base row",
                self.blank_mass
            )));
        }
        if !(0.0..=1.0).contains(&self.indel_prob) {
            return Err(Error::InvalidArgument(format!(
                "indel_prob {} not in [0,1]",
                self.indel_prob
            )));
        }
        Ok(())
    }
}

/// A strand as read: flanks, primers and the (already scrambled) payload.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadScenario {
    pub left_flank: QuaternaryWord,
    pub left_primer: QuaternaryWord,
    pub payload: QuaternaryWord,
    pub right_primer: QuaternaryWord,
    pub right_flank: QuaternaryWord,
    pub truth: QuaternaryWord,
}

impl ReadScenario {
    /// Truth index of the first left-primer base.
    pub fn primer_index(&self) -> usize {
        self.left_flank.len()
    }
}

fn random_dna(len: usize, rng: &mut impl Rng) -> QuaternaryWord {
    QuaternaryWord(
        (0..len)
            .map(|_| Base::from_index(rng.random_range(0..4)))
            .collect(),
    )
}

pub fn compose_read(
    payload: &QuaternaryWord,
    left_primer: &QuaternaryWord,
    right_primer: &QuaternaryWord,
    flanks: (usize, usize),
    rng: &mut impl Rng,
) -> Result<ReadScenario> {
    if left_primer.is_empty() || right_primer.is_empty() {
        return Err(Error::InvalidArgument("primers must be nonempty".into()));
    }
    let left_flank = random_dna(flanks.0, rng);
    let right_flank = random_dna(flanks.1, rng);
    let truth = QuaternaryWord::concat(&[
        &left_flank,
        left_primer,
        payload,
        right_primer,
        &right_flank,
    ]);
    Ok(ReadScenario {
        left_flank,
        left_primer: left_primer.clone(),
        payload: payload.clone(),
        right_primer: right_primer.clone(),
        right_flank,
        truth,
    })
}

/// Column builder shared by both layouts.
struct Emitter<'a> {
    p: &'a ChannelParams,
    q: usize,
    rng: ChaCha8Rng,
    dwell: Geometric,
    noise: Option<Beta<f64>>,
    data: Vec<f64>,
}

/// Concentration of the per-column off-target mass: Beta(k·eps, k·(1-eps)).
/// Small values give a few badly confused columns among many clean ones.
pub const NOISE_CONCENTRATION: f64 = 2.0;

impl<'a> Emitter<'a> {
    fn new(p: &'a ChannelParams, q: usize) -> Result<Self> {
        p.validate()?;
        let dwell = Geometric::new(1.0 / p.mean_dwell)
            .map_err(|e| Error::InvalidArgument(format!("dwell distribution: {e}")))?;
        let noise = if p.noise_eps > 0.0 {
            let k = NOISE_CONCENTRATION;
            Some(
                Beta::new(k * p.noise_eps, k * (1.0 - p.noise_eps))
                    .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self {
            p,
            q,
            rng: ChaCha8Rng::seed_from_u64(p.seed),
            dwell,
            noise,
            data: Vec::new(),
        })
    }

    fn columns(&self) -> usize {
        self.data.len() / self.q
    }

    /// Geometric on {1, 2, ...} with the configured mean, in columns.
    fn draw_columns(&mut self) -> usize {
        let samples = 1 + self.dwell.sample(&mut self.rng) as usize;
        samples.div_ceil(self.p.stride)
    }

    /// One column. The mass leaving `row` is Beta distributed with mean
    /// `noise_eps` and shared among the other rows in flat-Dirichlet
    /// proportions; then up to `shift` is moved from `row` to `to`.
    fn push(&mut self, row: usize, shift: Option<(usize, f64)>) {
        let start = self.data.len();
        self.data.resize(start + self.q, 0.0);
        let off = match &self.noise {
            Some(beta) => beta.sample(&mut self.rng),
            None => 0.0,
        };
        if off > 0.0 {
            let weights: Vec<f64> = (0..self.q - 1)
                .map(|_| Exp1.sample(&mut self.rng))
                .collect();
            let total: f64 = weights.iter().sum();
            let mut w = weights.into_iter();
            for r in (0..self.q).filter(|&r| r != row) {
                self.data[start + r] = off * w.next().unwrap_or(0.0) / total;
            }
        }
        self.data[start + row] = 1.0 - off;
        if let Some((to, mass)) = shift {
            let mass = mass.min(self.data[start + row]);
            if mass > 0.0 && to != row {
                self.data[start + row] -= mass;
                self.data[start + to] += mass;
            }
        }
    }

    fn finish(self, kind: MatrixKind) -> Result<ProbabilityMatrix> {
        ProbabilityMatrix::new(kind, self.data)
    }
}

/// Indel event for one truth unit.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Event {
    Normal,
    Dropped,
    Doubled,
}

fn draw_event(p: &ChannelParams, rng: &mut impl Rng) -> Event {
    if p.indel_prob == 0.0 {
        return Event::Normal;
    }
    let u: f64 = rng.random();
    if u < p.indel_prob / 2.0 {
        Event::Dropped
    } else if u < p.indel_prob {
        Event::Doubled
    } else {
        Event::Normal
    }
}

pub fn simulate_ctc_matrix(
    scn: &ReadScenario,
    p: &ChannelParams,
) -> Result<(ProbabilityMatrix, Alignment)> {
    let mut em = Emitter::new(p, 5)?;
    let mut spans = Vec::with_capacity(scn.truth.len());
    for b in scn.truth.iter() {
        let start = em.columns();
        let row = ctc_row(b);
        let event = draw_event(p, &mut em.rng);
        let reps = if event == Event::Doubled { 2 } else { 1 };
        for rep in 0..reps {
            let n = em.draw_columns();
            for _ in 0..n {
                if event == Event::Dropped {
                    em.push(BLANK, None);
                } else {
                    em.push(row, Some((BLANK, p.blank_mass)));
                }
            }
            if rep + 1 < reps || event != Event::Dropped {
                em.push(BLANK, None);
            }
        }
        spans.push(start..em.columns());
    }
    Ok((em.finish(MatrixKind::Ctc5)?, Alignment { spans }))
}

pub fn simulate_kmer_matrix(
    scn: &ReadScenario,
    p: &ChannelParams,
    k: usize,
) -> Result<(ProbabilityMatrix, Alignment)> {
    if k == 0 || k > 6 {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..=6")));
    }
    let kind = MatrixKind::Kmer(k);
    let mut em = Emitter::new(p, kind.q())?;
    let symbols = scn.truth.symbols();
    let mut spans = Vec::new();
    for window in symbols.windows(k) {
        let start = em.columns();
        let row = kmer_index(window);
        let event = draw_event(p, &mut em.rng);
        let n = match event {
            Event::Normal => em.draw_columns(),
            // A k-mer stays in the pore twice as long, or barely registers.
            Event::Doubled => em.draw_columns() + em.draw_columns(),
            Event::Dropped => 1,
        };
        for _ in 0..n {
            em.push(row, None);
        }
        spans.push(start..em.columns());
    }
    Ok((em.finish(kind)?, Alignment { spans }))
}

/// A simulated read with its matrix and ground truth.
#[derive(Debug, Clone)]
pub struct SimulatedRead {
    pub scenario: ReadScenario,
    pub matrix: ProbabilityMatrix,
    pub alignment: Alignment,
}

impl SimulatedRead {
    pub fn simulate(scenario: ReadScenario, p: &ChannelParams, kind: MatrixKind) -> Result<Self> {
        let (matrix, alignment) = match kind {
            MatrixKind::Ctc5 => simulate_ctc_matrix(&scenario, p)?,
            MatrixKind::Kmer(k) => simulate_kmer_matrix(&scenario, p, k)?,
        };
        Ok(Self {
            scenario,
            matrix,
            alignment,
        })
    }

    /// First column of the left primer.
    pub fn primer_column(&self) -> usize {
        self.alignment.spans[self.scenario.primer_index()].start
    }
}

/// Greedy CTC collapse of per-column argmax: merge repeats, drop blanks.
pub fn greedy_ctc_decode(m: &ProbabilityMatrix) -> QuaternaryWord {
    let mut out = Vec::new();
    let mut prev = usize::MAX;
    for j in 0..m.t() {
        let col = m.column(j);
        let best = (0..col.len())
            .max_by(|&a, &b| col[a].total_cmp(&col[b]).then(b.cmp(&a)))
            .unwrap_or(BLANK);
        if best != BLANK && best != prev {
            out.push(Base::from_index((best - 1) as u8));
        }
        prev = best;
    }
    QuaternaryWord(out)
}
