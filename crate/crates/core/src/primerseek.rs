//! Primer localization by restricted beam search.
//!
//! Candidate start columns are processed in blocks. Within a block every
//! candidate is seeded with the first target unit, optionally thinned by the
//! subsampling filter, pruned to a probability mass fraction and then
//! propagated bucket by bucket (buckets group starts modulo `delta`). Beams
//! that have covered the whole target add their probability to the score of
//! their start column; the best-scoring column is the estimate.
//!
//! All probabilities are kept as natural logarithms.

use std::collections::HashMap;

use crate::channel::{ctc_row, LogMatrix, MatrixKind, ProbabilityMatrix, BLANK};
use crate::dna::{kmer_index, QuaternaryWord};
use crate::error::{Error, Result};

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    pub logp: f64,
    pub start: usize,
    pub end: usize,
    /// Number of target units covered (at least 1).
    pub len: usize,
    /// CTC only: the last emission was a blank.
    pub blank: bool,
}

impl Beam {
    pub fn seed(logp: f64, start: usize) -> Self {
        Self {
            logp,
            start,
            end: start,
            len: 1,
            blank: false,
        }
    }
}

/// Higher probability first, then lower start, then lower end.
fn beam_order(a: &Beam, b: &Beam) -> std::cmp::Ordering {
    b.logp
        .total_cmp(&a.logp)
        .then(a.start.cmp(&b.start))
        .then(a.end.cmp(&b.end))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchWindow {
    FirstHalf,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeekParams {
    /// Beams kept per bucket.
    pub w: usize,
    /// Subsampling factor; 1 disables the filter.
    pub s: usize,
    /// Extra propagation depth in the subsampling filter.
    pub d: usize,
    /// Longest span (end - start) a beam may reach.
    pub d_max: usize,
    /// Bucket shift: starts in one bucket are `delta` apart.
    pub delta: usize,
    /// Probability mass kept by the concentration prune.
    pub tau: f64,
    pub window: SearchWindow,
    /// Skip beams that cannot beat the best score found so far.
    pub bound_by_best: bool,
}

impl SeekParams {
    pub fn ctc_default() -> Self {
        Self {
            w: 8,
            s: 6,
            d: 4,
            d_max: 600,
            delta: 50,
            tau: 0.98,
            window: SearchWindow::FirstHalf,
            bound_by_best: true,
        }
    }

    pub fn kmer_default() -> Self {
        Self {
            w: 512,
            s: 1,
            tau: 1.0,
            ..Self::ctc_default()
        }
    }

    pub fn default_for(kind: MatrixKind) -> Self {
        match kind {
            MatrixKind::Ctc5 => Self::ctc_default(),
            MatrixKind::Kmer(_) => Self::kmer_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w == 0 || self.s == 0 || self.delta == 0 || self.d_max == 0 {
            return Err(Error::InvalidArgument(
                "w, s, delta and d_max must be positive".into(),
            ));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau {} not in (0, 1]",
                self.tau
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeekResult {
    pub position: Option<usize>,
    /// Log of the aggregated probability at `position`; `-inf` when absent.
    pub score: f64,
    pub beam_extensions: u64,
}

/// Matrix rows of the target's units: bases for CTC, k-mers otherwise.
pub fn target_units(kind: MatrixKind, target: &QuaternaryWord) -> Result<Vec<usize>> {
    match kind {
        MatrixKind::Ctc5 => Ok(target.iter().map(ctc_row).collect()),
        MatrixKind::Kmer(k) => {
            if target.len() < k {
                return Err(Error::InvalidArgument(format!(
                    "target of {} bases is shorter than k = {k}",
                    target.len()
                )));
            }
            Ok(target.symbols().windows(k).map(kmer_index).collect())
        }
    }
}

/// Shared state for one search: the matrix, the target and the counter.
pub struct Searcher<'a> {
    lp: &'a LogMatrix,
    units: &'a [usize],
    ctc: bool,
    d_max: usize,
    pub extensions: u64,
}

impl<'a> Searcher<'a> {
    pub fn new(lp: &'a LogMatrix, units: &'a [usize], ctc: bool, d_max: usize) -> Self {
        Self {
            lp,
            units,
            ctc,
            d_max,
            extensions: 0,
        }
    }

    pub fn target_len(&self) -> usize {
        self.units.len()
    }

    pub fn seed(&self, start: usize) -> Beam {
        Beam::seed(self.lp.get(self.units[0], start), start)
    }

    /// Dwell and extend children of `b` at column `b.end + 1`.
    pub fn expand(&mut self, b: &Beam, out: &mut Vec<Beam>) {
        let col = b.end + 1;
        if col >= self.lp.t() || col - b.start > self.d_max {
            return;
        }
        let cur = self.units[b.len - 1];
        let next = self.units.get(b.len).copied();
        let mut push = |row: usize, len: usize, blank: bool, ext: &mut u64| {
            *ext += 1;
            let logp = b.logp + self.lp.get(row, col);
            if logp > f64::NEG_INFINITY {
                out.push(Beam {
                    logp,
                    start: b.start,
                    end: col,
                    len,
                    blank,
                });
            }
        };
        let ext = &mut self.extensions;
        if self.ctc {
            push(BLANK, b.len, true, ext);
            if !b.blank {
                push(cur, b.len, false, ext);
            }
            if let Some(v) = next {
                if b.blank || v != cur {
                    push(v, b.len + 1, false, ext);
                }
            }
        } else {
            push(cur, b.len, false, ext);
            if let Some(v) = next {
                push(v, b.len + 1, false, ext);
            }
        }
    }
}

/// Merges beams that agree on `key`: probabilities add and the start of the
/// more probable member is kept. Output is sorted best first.
fn merge_by<K: std::hash::Hash + Eq>(beams: Vec<Beam>, key: impl Fn(&Beam) -> K) -> Vec<Beam> {
    let mut slots: HashMap<K, usize> = HashMap::with_capacity(beams.len());
    // Merged beam and the probability of its best member.
    let mut out: Vec<(Beam, f64)> = Vec::with_capacity(beams.len());
    for b in beams {
        match slots.get(&key(&b)) {
            Some(&i) => {
                let (kept, top) = &mut out[i];
                let total = log_add(kept.logp, b.logp);
                let leader = Beam {
                    logp: *top,
                    ..*kept
                };
                if beam_order(&b, &leader).is_lt() {
                    *kept = b;
                    *top = b.logp;
                }
                kept.logp = total;
            }
            None => {
                slots.insert(key(&b), out.len());
                out.push((b, b.logp));
            }
        }
    }
    let mut out: Vec<Beam> = out.into_iter().map(|(b, _)| b).collect();
    out.sort_by(beam_order);
    out
}

fn merge_same_start(beams: Vec<Beam>) -> Vec<Beam> {
    merge_by(beams, |b| (b.start, b.end, b.len, b.blank))
}

/// Staggered propagation so that beams from neighbouring starts end on the
/// same columns, followed by a merge on `(end, len)`.
pub fn subsampling_filter(
    searcher: &mut Searcher,
    beams: Vec<Beam>,
    s: usize,
    d: usize,
) -> Vec<Beam> {
    if beams.is_empty() || s <= 1 {
        return beams;
    }
    let keep = (beams.len() / s).max(1);
    let mut union = Vec::new();
    for i in 0..s {
        let mut bucket: Vec<Beam> = beams.iter().filter(|b| b.start % s == i).copied().collect();
        for _ in 0..s - i + d {
            let mut children = Vec::with_capacity(bucket.len() * 3);
            for b in &bucket {
                searcher.expand(b, &mut children);
            }
            if children.is_empty() {
                bucket.clear();
                break;
            }
            bucket = merge_same_start(children);
            bucket.truncate(keep);
        }
        union.extend(bucket);
    }
    let mut merged = merge_by(union, |b| (b.end, b.len, b.blank));
    merged.truncate(keep);
    merged
}

/// Keeps the most probable beams whose combined mass is at most `tau` of the
/// total (always at least one).
pub fn prune(mut beams: Vec<Beam>, tau: f64) -> Vec<Beam> {
    if beams.is_empty() || tau >= 1.0 {
        return beams;
    }
    beams.sort_by(beam_order);
    let total = beams
        .iter()
        .fold(f64::NEG_INFINITY, |acc, b| log_add(acc, b.logp));
    let budget = total + tau.ln();
    let mut acc = f64::NEG_INFINITY;
    let mut keep = 0;
    for b in &beams {
        let next = log_add(acc, b.logp);
        if keep > 0 && next > budget {
            break;
        }
        acc = next;
        keep += 1;
    }
    beams.truncate(keep);
    beams
}

/// Aggregated log-probability per start column.
pub type Scores = HashMap<usize, f64>;

/// Best-first propagation of start buckets; returns the best start, its
/// score and the per-start scores.
pub fn primer_beam_search(
    searcher: &mut Searcher,
    beams: Vec<Beam>,
    w: usize,
    delta: usize,
    bound_by_best: bool,
) -> (Option<usize>, f64, Scores) {
    let target = searcher.target_len();
    let mut phi: Scores = HashMap::new();
    let mut best: (Option<usize>, f64) = (None, f64::NEG_INFINITY);
    let credit = |beams: &[Beam], phi: &mut Scores, best: &mut (Option<usize>, f64)| {
        for b in beams.iter().filter(|b| b.len == target) {
            let v = phi.entry(b.start).or_insert(f64::NEG_INFINITY);
            *v = log_add(*v, b.logp);
            let better = *v > best.1 || (*v == best.1 && best.0.is_some_and(|p| b.start < p));
            if better {
                *best = (Some(b.start), *v);
            }
        }
    };

    let mut buckets: Vec<Vec<Beam>> = vec![Vec::new(); delta];
    for b in beams {
        buckets[b.start % delta].push(b);
    }
    let mut mass = vec![f64::NEG_INFINITY; delta];
    for (j, bucket) in buckets.iter_mut().enumerate() {
        bucket.sort_by(beam_order);
        bucket.truncate(w);
        credit(bucket, &mut phi, &mut best);
        mass[j] = bucket
            .iter()
            .fold(f64::NEG_INFINITY, |acc, b| log_add(acc, b.logp));
    }

    while let Some(j) = (0..delta)
        .filter(|&j| mass[j] > f64::NEG_INFINITY)
        .max_by(|&a, &b| mass[a].total_cmp(&mass[b]).then(b.cmp(&a)))
    {
        let mut children = Vec::with_capacity(buckets[j].len() * 3);
        for b in &buckets[j] {
            if bound_by_best && b.logp < best.1 {
                continue;
            }
            searcher.expand(b, &mut children);
        }
        if children.is_empty() {
            buckets[j].clear();
            mass[j] = f64::NEG_INFINITY;
            continue;
        }
        let mut next = merge_same_start(children);
        next.truncate(w);
        mass[j] = next
            .iter()
            .fold(f64::NEG_INFINITY, |acc, b| log_add(acc, b.logp));
        credit(&next, &mut phi, &mut best);
        buckets[j] = next;
    }
    (best.0, best.1, phi)
}

/// Estimates the column at which `target` starts in `p`.
pub fn seek(
    p: &ProbabilityMatrix,
    target: &QuaternaryWord,
    params: &SeekParams,
) -> Result<SeekResult> {
    params.validate()?;
    if target.is_empty() {
        return Err(Error::InvalidArgument("empty target".into()));
    }
    let units = target_units(p.kind(), target)?;
    let t = p.t();
    let mut result = SeekResult {
        position: None,
        score: f64::NEG_INFINITY,
        beam_extensions: 0,
    };
    if t == 0 {
        return Ok(result);
    }
    let lp = p.log_matrix();
    let ctc = p.kind() == MatrixKind::Ctc5;
    let mut searcher = Searcher::new(&lp, &units, ctc, params.d_max);
    let half = t.div_ceil(2);
    let limit = match params.window {
        SearchWindow::FirstHalf => half,
        SearchWindow::Full => t,
    };
    let block = (params.w * params.delta * params.s).min(half).max(1);
    let mut from = 0;
    while from < limit {
        let to = (from + block).min(limit);
        let seeds: Vec<Beam> = (from..to)
            .map(|i| searcher.seed(i))
            .filter(|b| b.logp > f64::NEG_INFINITY)
            .collect();
        let beams = subsampling_filter(&mut searcher, seeds, params.s, params.d);
        let beams = prune(beams, params.tau);
        let (pos, score, _) = primer_beam_search(
            &mut searcher,
            beams,
            params.w,
            params.delta,
            params.bound_by_best,
        );
        if pos.is_some() && score > result.score {
            result.position = pos;
            result.score = score;
        }
        from = to;
    }
    result.beam_extensions = searcher.extensions;
    Ok(result)
}
