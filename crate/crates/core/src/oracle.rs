//! Exact references for small instances: codeword enumeration, the CTC
//! forward probability and brute-force maximum-likelihood decoding.

use rayon::prelude::*;

use crate::channel::{ctc_row, MatrixKind, ProbabilityMatrix, BLANK};
use crate::codebook::{Code, ParityCheckMatrix};
use crate::dna::QuaternaryWord;
use crate::error::{Error, Result};
use crate::gf2::{kernel_basis, BitVec};
use crate::primerseek::log_add;

/// Largest code dimension [`enumerate_codewords`] accepts.
pub const MAX_ENUM_DIM: usize = 20;

/// Two candidates closer than this in log probability count as tied.
pub const UNIQUE_MARGIN: f64 = 1e-6;

/// All codewords of `h` (2^dim of them, in Gray-code order of the basis).
pub fn enumerate_codewords(h: &ParityCheckMatrix) -> Result<Vec<BitVec>> {
    let (basis, _) = kernel_basis(&h.rows, h.n_cols);
    let dim = basis.len();
    if dim > MAX_ENUM_DIM {
        return Err(Error::EnumerationLimit {
            dim,
            limit: MAX_ENUM_DIM,
        });
    }
    let mut out = Vec::with_capacity(1 << dim);
    let mut word = BitVec::zeros(h.n_cols);
    out.push(word.clone());
    for i in 1u64..1 << dim {
        word.xor_assign(&basis[i.trailing_zeros() as usize]);
        out.push(word.clone());
    }
    Ok(out)
}

/// `ln P(seq | p)`, summed over every CTC alignment of `seq` to all
/// columns of `p`.
pub fn ctc_forward_logprob(p: &ProbabilityMatrix, seq: &QuaternaryWord) -> Result<f64> {
    if p.kind() != MatrixKind::Ctc5 {
        return Err(Error::InvalidArgument(
            "CTC forward needs a CTC5 matrix".into(),
        ));
    }
    let lp = p.log_matrix();
    // Extended labels: blank, s1, blank, s2, ..., blank.
    let mut ext = Vec::with_capacity(2 * seq.len() + 1);
    ext.push(BLANK);
    for b in seq.iter() {
        ext.push(ctc_row(b));
        ext.push(BLANK);
    }
    let n = ext.len();
    let t = lp.t();
    if t == 0 {
        return Ok(if seq.is_empty() {
            0.0
        } else {
            f64::NEG_INFINITY
        });
    }
    let mut alpha = vec![f64::NEG_INFINITY; n];
    alpha[0] = lp.get(ext[0], 0);
    if n > 1 {
        alpha[1] = lp.get(ext[1], 0);
    }
    for j in 1..t {
        let mut next = vec![f64::NEG_INFINITY; n];
        for s in 0..n {
            let mut a = alpha[s];
            if s >= 1 {
                a = log_add(a, alpha[s - 1]);
            }
            if s >= 2 && ext[s] != BLANK && ext[s] != ext[s - 2] {
                a = log_add(a, alpha[s - 2]);
            }
            if a > f64::NEG_INFINITY {
                next[s] = a + lp.get(ext[s], j);
            }
        }
        alpha = next;
    }
    Ok(if n > 1 {
        log_add(alpha[n - 1], alpha[n - 2])
    } else {
        alpha[0]
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleVerdict {
    /// Winning payload as transmitted (markers and offset applied).
    pub best_word: QuaternaryWord,
    pub best_codeword: BitVec,
    pub best_logprob: f64,
    /// Gap to the runner-up (infinite for a one-word code).
    pub margin: f64,
    pub unique: bool,
}

/// Scores `left ‖ payload ‖ right` for every codeword and returns the best.
pub fn ml_decode_bruteforce(
    p: &ProbabilityMatrix,
    code: &Code,
    left: &QuaternaryWord,
    right: &QuaternaryWord,
) -> Result<OracleVerdict> {
    let words = enumerate_codewords(&code.h)?;
    let mut scored: Vec<(f64, QuaternaryWord, BitVec)> = words
        .into_par_iter()
        .map(|cw| {
            let payload = code.payload_for_codeword(&cw)?;
            let full = QuaternaryWord::concat(&[left, &payload, right]);
            Ok((ctc_forward_logprob(p, &full)?, payload, cw))
        })
        .collect::<Result<_>>()?;
    // Deterministic: highest score, then enumeration order.
    let mut best = 0;
    for (i, s) in scored.iter().enumerate() {
        if s.0 > scored[best].0 {
            best = i;
        }
    }
    let runner_up = scored
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, s)| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let best_logprob = scored[best].0;
    let margin = if best_logprob == f64::NEG_INFINITY {
        0.0
    } else {
        best_logprob - runner_up
    };
    let (_, best_word, best_codeword) = scored.swap_remove(best);
    Ok(OracleVerdict {
        best_word,
        best_codeword,
        best_logprob,
        margin,
        unique: margin > UNIQUE_MARGIN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{compose_read, simulate_ctc_matrix, ChannelParams};
    use crate::codebook::example_spec;
    use crate::dna::Base;
    use crate::gf2::rank;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(t: usize, rng: &mut impl Rng) -> ProbabilityMatrix {
        let mut data = Vec::with_capacity(5 * t);
        for _ in 0..t {
            let col: Vec<f64> = (0..5).map(|_| rng.random_range(0.01..1.0)).collect();
            let sum: f64 = col.iter().sum();
            data.extend(col.iter().map(|x| x / sum));
        }
        ProbabilityMatrix::new(MatrixKind::Ctc5, data).unwrap()
    }

    /// Collapse of a path of rows: merge repeats, then drop blanks.
    fn collapse(path: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        let mut prev = usize::MAX;
        for &r in path {
            if r != prev && r != BLANK {
                out.push(r);
            }
            prev = r;
        }
        out
    }

    /// Sum over all 5^T row paths that collapse to `seq`.
    fn exhaustive(p: &ProbabilityMatrix, seq: &QuaternaryWord) -> f64 {
        let target: Vec<usize> = seq.iter().map(ctc_row).collect();
        let t = p.t();
        let mut total = 0.0;
        for code in 0..5usize.pow(t as u32) {
            let mut c = code;
            let path: Vec<usize> = (0..t)
                .map(|_| {
                    let r = c % 5;
                    c /= 5;
                    r
                })
                .collect();
            if collapse(&path) == target {
                total += path
                    .iter()
                    .enumerate()
                    .map(|(j, &r)| p.get(r, j))
                    .product::<f64>();
            }
        }
        total
    }

    #[test]
    fn forward_matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for t in 1..=6 {
            for _ in 0..8 {
                let m = random_matrix(t, &mut rng);
                let len = rng.random_range(0..=4);
                let seq = QuaternaryWord(
                    (0..len)
                        .map(|_| Base::from_index(rng.random_range(0..4)))
                        .collect(),
                );
                let exact = exhaustive(&m, &seq);
                let fwd = ctc_forward_logprob(&m, &seq).unwrap();
                if exact == 0.0 {
                    assert_eq!(fwd, f64::NEG_INFINITY, "T={t} seq={seq}");
                } else {
                    assert!((fwd.exp() - exact).abs() <= 1e-9 * exact, "T={t} seq={seq}");
                }
            }
        }
    }

    #[test]
    fn forward_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(1, &mut rng);
        let a: QuaternaryWord = "G".parse().unwrap();
        assert!(
            (ctc_forward_logprob(&m, &a).unwrap() - m.get(ctc_row(Base::G), 0).ln()).abs() < 1e-12
        );
        // AA needs a blank in between: three columns.
        let m2 = random_matrix(2, &mut rng);
        assert_eq!(
            ctc_forward_logprob(&m2, &"AA".parse().unwrap()).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            ctc_forward_logprob(&m2, &"ACG".parse().unwrap()).unwrap(),
            f64::NEG_INFINITY
        );
        let k = ProbabilityMatrix::uniform(MatrixKind::Kmer(1), 2);
        assert!(ctc_forward_logprob(&k, &a).is_err());
    }

    #[test]
    fn enumeration_counts() {
        let code = Code::new(example_spec()).unwrap();
        let words = enumerate_codewords(&code.h).unwrap();
        let r = rank(&code.h.rows, code.h.n_cols);
        assert_eq!(words.len(), 1 << (10 - r));
        for w in &words {
            assert!(code.h.is_codeword(w).unwrap());
        }
        let zero = ParityCheckMatrix::new(vec![BitVec::zeros(4)], 4).unwrap();
        let all = enumerate_codewords(&zero).unwrap();
        assert_eq!(all.len(), 16);
        let mut seen: Vec<Vec<u8>> = all.iter().map(|w| w.to_bits()).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 16);
        let wide = ParityCheckMatrix::new(vec![BitVec::zeros(21)], 21).unwrap();
        assert_eq!(
            enumerate_codewords(&wide),
            Err(Error::EnumerationLimit {
                dim: 21,
                limit: MAX_ENUM_DIM
            })
        );
    }

    #[test]
    fn noiseless_and_uniform_verdicts() {
        let code = Code::new(example_spec()).unwrap();
        let left: QuaternaryWord = "ACGTAC".parse().unwrap();
        let right: QuaternaryWord = "TTGCA".parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for cw in enumerate_codewords(&code.h).unwrap() {
            let payload = code.payload_for_codeword(&cw).unwrap();
            let scn = compose_read(&payload, &left, &right, (0, 0), &mut rng).unwrap();
            let (m, _) = simulate_ctc_matrix(&scn, &ChannelParams::r9_like(7)).unwrap();
            let v = ml_decode_bruteforce(&m, &code, &left, &right).unwrap();
            assert_eq!(v.best_codeword, cw);
            assert!(v.margin > 0.0 && v.unique);
        }
        // On a uniform matrix a sequence's probability only depends on how
        // many alignments it has, which depends on its adjacent repeats.
        let u = ProbabilityMatrix::uniform(MatrixKind::Ctc5, 60);
        let mut by_repeats: std::collections::HashMap<usize, f64> = Default::default();
        for cw in enumerate_codewords(&code.h).unwrap() {
            let full =
                QuaternaryWord::concat(&[&left, &code.payload_for_codeword(&cw).unwrap(), &right]);
            let repeats = full.symbols().windows(2).filter(|w| w[0] == w[1]).count();
            let lp = ctc_forward_logprob(&u, &full).unwrap();
            let prev = *by_repeats.entry(repeats).or_insert(lp);
            assert!((prev - lp).abs() < 1e-9);
        }
        // Too few columns for any candidate: everything ties at -inf.
        let short = ProbabilityMatrix::uniform(MatrixKind::Ctc5, 5);
        let v = ml_decode_bruteforce(&short, &code, &left, &right).unwrap();
        assert_eq!(v.best_logprob, f64::NEG_INFINITY);
        assert!(!v.unique);
    }
}
