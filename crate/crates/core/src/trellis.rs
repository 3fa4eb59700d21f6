//! Syndrome trellises built from a parity-check matrix.
//!
//! A state at binary level `t` is the partial syndrome `c_1 h_1 + ... + c_t h_t`
//! packed into a `u32`, first row of H in the most significant position. For
//! matrices with more than 32 rows only rows that have started but not yet
//! finished can be nonzero, so each such row borrows a bit while active; this
//! works as long as at most 32 rows are active at once.

use std::fmt::Write as _;

use crate::codebook::{marker_count, Code, ParityCheckMatrix};
use crate::dna::{Base, QuaternaryWord};
use crate::error::{Error, Result};
use crate::gf2::BitVec;

/// Marks a missing edge in [`Section::next`].
pub const NO_EDGE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alphabet {
    Binary,
    Quaternary,
}

impl Alphabet {
    pub fn size(self) -> usize {
        match self {
            Alphabet::Binary => 2,
            Alphabet::Quaternary => 4,
        }
    }

    fn symbol_char(self, s: usize) -> char {
        match self {
            Alphabet::Binary => (b'0' + s as u8) as char,
            Alphabet::Quaternary => Base::from_index(s as u8).to_char(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionKind {
    Payload,
    /// Constant edge: every state keeps its syndrome and emits `symbol`.
    Marker(Base),
}

/// Edges between level `t` and level `t + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub kind: SectionKind,
    /// `next[i][x]` is the index (into level `t + 1`) reached from state `i`
    /// of level `t` by symbol `x`, or [`NO_EDGE`].
    pub next: Vec<[u32; 4]>,
}

impl Section {
    pub fn edge(&self, from: usize, symbol: usize) -> Option<usize> {
        let to = self.next[from][symbol];
        (to != NO_EDGE).then_some(to as usize)
    }

    pub fn out_degree(&self, from: usize) -> usize {
        self.next[from].iter().filter(|&&e| e != NO_EDGE).count()
    }
}

/// Leveled graph of syndrome states. `levels[t]` lists the state ids of level
/// `t` in ascending order; `sections[t]` holds the edges out of level `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyndromeTrellis {
    pub alphabet: Alphabet,
    pub levels: Vec<Vec<u32>>,
    pub sections: Vec<Section>,
}

/// State ids along a path, one per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatePath {
    pub states: Vec<u32>,
}

/// How column `t` acts on a packed state.
#[derive(Debug, Clone, Copy, Default)]
struct Step {
    /// Slots (level `t` packing) of rows with a 1 in column `t`.
    flip: u32,
    /// Slots of rows whose last 1 is column `t`; they must end at zero.
    finish: u32,
    /// Slots (level `t + 1` packing) of rows whose first 1 is column `t`.
    start: u32,
    /// A row consisting of column `t` alone forbids symbol 1.
    forbid_one: bool,
}

impl Step {
    fn apply(&self, id: u32, bit: bool) -> Option<u32> {
        if !bit {
            return (id & self.finish == 0).then_some(id);
        }
        let y = id ^ self.flip;
        (!self.forbid_one && y & self.finish == 0).then_some((y & !self.finish) | self.start)
    }
}

/// Per-column packing plan. Up to 32 rows use the plain syndrome with the
/// first row as the most significant bit. Larger matrices give each row a
/// bit slot only while it is active (between its first and last 1), reusing
/// slots of finished rows.
fn packing_plan(h: &ParityCheckMatrix) -> Result<Vec<Step>> {
    let n = h.n_cols;
    let mut steps = vec![Step::default(); n];
    let spans: Vec<Option<(usize, usize)>> = h
        .rows
        .iter()
        .map(|row| Some((row.first_one()?, row.last_one()?)))
        .collect();
    if h.n_rows() <= 32 {
        let top = h.n_rows().saturating_sub(1);
        for (r, span) in spans.iter().enumerate() {
            let Some((_, last)) = *span else { continue };
            let bit = 1u32 << (top - r);
            for col in h.rows[r].ones() {
                steps[col].flip |= bit;
            }
            steps[last].finish |= bit;
        }
        return Ok(steps);
    }

    let mut by_start: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (r, span) in spans.iter().enumerate() {
        if let Some((first, _)) = *span {
            by_start[first].push(r);
        }
    }
    let mut slot = vec![usize::MAX; h.n_rows()];
    let mut free: Vec<usize> = Vec::new();
    let mut used = 0usize;
    let mut active: Vec<usize> = Vec::new();
    for t in 0..n {
        let step = &mut steps[t];
        for &r in &active {
            let bit = 1u32 << slot[r];
            if h.rows[r].get(t) {
                step.flip |= bit;
            }
            if spans[r].is_some_and(|(_, last)| last == t) {
                step.finish |= bit;
            }
        }
        active.retain(|&r| {
            let done = spans[r].is_some_and(|(_, last)| last == t);
            if done {
                free.push(slot[r]);
            }
            !done
        });
        free.sort_unstable_by(|a, b| b.cmp(a));
        for &r in &by_start[t] {
            let (_, last) = spans[r].expect("started rows are nonzero");
            if last == t {
                step.forbid_one = true;
                continue;
            }
            let s = free.pop().unwrap_or_else(|| {
                used += 1;
                used - 1
            });
            if s >= 32 {
                return Err(Error::StateTooWide { needed: s + 1 });
            }
            slot[r] = s;
            step.start |= 1 << s;
            active.push(r);
        }
    }
    Ok(steps)
}

fn no_edges(n: usize) -> Vec<[u32; 4]> {
    vec![[NO_EDGE; 4]; n]
}

/// Forward construction followed by a backward trim; every remaining state
/// lies on a path from the zero state at level 0 to the zero state at level N.
pub fn build_binary_trellis(h: &ParityCheckMatrix) -> Result<SyndromeTrellis> {
    let n = h.n_cols;
    let plan = packing_plan(h)?;
    let mut levels: Vec<Vec<u32>> = vec![vec![0]];
    let mut targets: Vec<Vec<[Option<u32>; 2]>> = Vec::with_capacity(n);
    for t in 0..n {
        let step = |id: u32, bit: usize| plan[t].apply(id, bit == 1);
        let outs: Vec<[Option<u32>; 2]> = levels[t]
            .iter()
            .map(|&id| [step(id, 0), step(id, 1)])
            .collect();
        let mut next: Vec<u32> = outs.iter().flatten().flatten().copied().collect();
        next.sort_unstable();
        next.dedup();
        targets.push(outs);
        levels.push(next);
    }

    // Backward trim.
    let mut alive: Vec<Vec<bool>> = levels.iter().map(|l| vec![false; l.len()]).collect();
    for (i, &id) in levels[n].iter().enumerate() {
        alive[n][i] = id == 0;
    }
    for t in (0..n).rev() {
        for i in 0..levels[t].len() {
            alive[t][i] = targets[t][i].iter().flatten().any(|&to| {
                let j = levels[t + 1].binary_search(&to).expect("target exists");
                alive[t + 1][j]
            });
        }
    }

    let kept: Vec<Vec<u32>> = levels
        .iter()
        .zip(&alive)
        .map(|(l, a)| {
            l.iter()
                .zip(a)
                .filter(|(_, &k)| k)
                .map(|(&s, _)| s)
                .collect()
        })
        .collect();
    let mut sections = Vec::with_capacity(n);
    for t in 0..n {
        let mut next = no_edges(kept[t].len());
        for (i, &id) in kept[t].iter().enumerate() {
            let old = levels[t].binary_search(&id).expect("kept state exists");
            for (x, to) in targets[t][old].iter().enumerate() {
                if let Some(to) = to {
                    if let Ok(j) = kept[t + 1].binary_search(to) {
                        next[i][x] = j as u32;
                    }
                }
            }
        }
        sections.push(Section {
            kind: SectionKind::Payload,
            next,
        });
    }
    Ok(SyndromeTrellis {
        alphabet: Alphabet::Binary,
        levels: kept,
        sections,
    })
}

/// Builds the trellis a decoder walks for `code`: binary, merged to bases,
/// with marker sections when the code has markers.
pub fn build_code_trellis(code: &Code) -> Result<SyndromeTrellis> {
    let q = build_binary_trellis(&code.h)?.to_quaternary()?;
    if code.spec.has_markers() {
        q.augment_with_markers(code.spec.marker_period, &code.spec.marker_symbol)
    } else {
        Ok(q)
    }
}

impl SyndromeTrellis {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn n_sections(&self) -> usize {
        self.sections.len()
    }

    pub fn max_states(&self) -> usize {
        self.levels.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn state_index(&self, level: usize, id: u32) -> Option<usize> {
        self.levels.get(level)?.binary_search(&id).ok()
    }

    /// Levels whose outgoing section is a constant marker edge.
    pub fn constant_levels(&self) -> Vec<usize> {
        self.sections
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s.kind, SectionKind::Marker(_)))
            .map(|(t, _)| t)
            .collect()
    }

    /// Merges pairs of binary sections into quaternary ones (00→A, 01→C,
    /// 10→G, 11→T).
    pub fn to_quaternary(&self) -> Result<SyndromeTrellis> {
        if self.alphabet != Alphabet::Binary {
            return Err(Error::InvalidArgument(
                "trellis is already quaternary".into(),
            ));
        }
        if !self.n_sections().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "binary trellis has an odd number of sections ({})",
                self.n_sections()
            )));
        }
        let mut sections = Vec::with_capacity(self.n_sections() / 2);
        for pair in self.sections.chunks(2) {
            let (first, second) = (&pair[0], &pair[1]);
            let next = first
                .next
                .iter()
                .map(|edges| {
                    let mut out = [NO_EDGE; 4];
                    for hi in 0..2 {
                        let mid = edges[hi];
                        if mid == NO_EDGE {
                            continue;
                        }
                        for lo in 0..2 {
                            out[2 * hi + lo] = second.next[mid as usize][lo];
                        }
                    }
                    out
                })
                .collect();
            sections.push(Section {
                kind: SectionKind::Payload,
                next,
            });
        }
        Ok(SyndromeTrellis {
            alphabet: Alphabet::Quaternary,
            levels: self.levels.iter().step_by(2).cloned().collect(),
            sections,
        })
    }

    /// Inserts constant marker sections after every `period` payload
    /// sections (including after a final full block). Labels are the
    /// marker bases before any offset is applied.
    pub fn augment_with_markers(&self, period: usize, marker: &[Base]) -> Result<SyndromeTrellis> {
        if self.alphabet != Alphabet::Quaternary {
            return Err(Error::InvalidArgument(
                "markers need a quaternary trellis".into(),
            ));
        }
        if period == 0 {
            return Err(Error::InvalidArgument(
                "marker period must be positive".into(),
            ));
        }
        if marker.is_empty() {
            return Err(Error::InvalidArgument("empty marker sequence".into()));
        }
        let payload = self.n_sections();
        let markers = marker_count(payload, period);
        let mut levels = vec![self.levels[0].clone()];
        let mut sections = Vec::with_capacity(payload + markers * marker.len());
        for (t, section) in self.sections.iter().enumerate() {
            sections.push(section.clone());
            levels.push(self.levels[t + 1].clone());
            if (t + 1) % period == 0 {
                for &m in marker {
                    let mut next = no_edges(self.levels[t + 1].len());
                    for (i, edges) in next.iter_mut().enumerate() {
                        edges[m.index() as usize] = i as u32;
                    }
                    sections.push(Section {
                        kind: SectionKind::Marker(m),
                        next,
                    });
                    levels.push(self.levels[t + 1].clone());
                }
            }
        }
        Ok(SyndromeTrellis {
            alphabet: Alphabet::Quaternary,
            levels,
            sections,
        })
    }

    /// Follows `symbols` (bits or base indices) from the zero state.
    pub fn path_for_symbols(&self, symbols: &[u8]) -> Result<StatePath> {
        if symbols.len() != self.n_sections() {
            return Err(Error::LengthMismatch {
                expected: self.n_sections(),
                actual: symbols.len(),
            });
        }
        let mut idx = self
            .state_index(0, 0)
            .ok_or(Error::NotACodeword { level: 0 })?;
        let mut states = vec![self.levels[0][idx]];
        for (t, &x) in symbols.iter().enumerate() {
            if x as usize >= self.alphabet.size() {
                return Err(Error::InvalidArgument(format!("symbol {x} at level {t}")));
            }
            idx = self.sections[t]
                .edge(idx, x as usize)
                .ok_or(Error::NotACodeword { level: t })?;
            states.push(self.levels[t + 1][idx]);
        }
        Ok(StatePath { states })
    }

    pub fn path_for_bits(&self, word: &BitVec) -> Result<StatePath> {
        let symbols: Vec<u8> = word.iter().map(u8::from).collect();
        self.path_for_symbols(&symbols)
    }

    pub fn path_for_bases(&self, word: &QuaternaryWord) -> Result<StatePath> {
        let symbols: Vec<u8> = word.iter().map(Base::index).collect();
        self.path_for_symbols(&symbols)
    }

    /// Number of full paths (as `f64`; exact while below 2^53).
    pub fn count_paths(&self) -> f64 {
        let mut counts = vec![1.0f64; self.levels[0].len()];
        for (t, section) in self.sections.iter().enumerate() {
            let mut next = vec![0.0; self.levels[t + 1].len()];
            for (i, edges) in section.next.iter().enumerate() {
                for &to in edges.iter().filter(|&&e| e != NO_EDGE) {
                    next[to as usize] += counts[i];
                }
            }
            counts = next;
        }
        counts.iter().sum()
    }

    /// All full-path label sequences, for small trellises.
    pub fn enumerate_labels(&self) -> Vec<Vec<u8>> {
        let mut partial: Vec<(usize, Vec<u8>)> =
            (0..self.levels[0].len()).map(|i| (i, vec![])).collect();
        for section in &self.sections {
            let mut grown = Vec::new();
            for (i, labels) in partial {
                for (x, &to) in section.next[i].iter().enumerate() {
                    if to != NO_EDGE {
                        let mut l = labels.clone();
                        l.push(x as u8);
                        grown.push((to as usize, l));
                    }
                }
            }
            partial = grown;
        }
        partial.into_iter().map(|(_, l)| l).collect()
    }

    /// Packed size of the costliest run of `c` consecutive levels: a 32-bit
    /// id plus 4 adjacency bits per state.
    pub fn storage_bits(&self, c: usize) -> usize {
        let per_level: Vec<usize> = self.levels.iter().map(|l| l.len() * 36).collect();
        let c = c.max(1);
        if per_level.len() <= c {
            return per_level.iter().sum();
        }
        per_level
            .windows(c)
            .map(|w| w.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Text dump, one `level from_state symbol to_state` line per edge.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (t, section) in self.sections.iter().enumerate() {
            for (i, edges) in section.next.iter().enumerate() {
                for (x, &to) in edges.iter().enumerate() {
                    if to != NO_EDGE {
                        let _ = writeln!(
                            out,
                            "{t} {} {} {}",
                            self.levels[t][i],
                            self.alphabet.symbol_char(x),
                            self.levels[t + 1][to as usize]
                        );
                    }
                }
            }
        }
        out
    }
}

/// Upper bound `2^(c-b+nu) * c * 36` on [`SyndromeTrellis::storage_bits`].
pub fn storage_bound(c: usize, b: usize, nu: usize) -> u128 {
    (1u128 << (c - b + nu)) * c as u128 * 36
}
