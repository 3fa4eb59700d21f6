//! Batch experiments: seeded read generation, decoding, error-rate curves,
//! localization agreement and beam complexity.

use std::fmt::Write as _;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::channel::{compose_read, ChannelParams, MatrixKind, SimulatedRead};
use crate::codebook::{Code, CodeSpec};
use crate::dna::QuaternaryWord;
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::primerseek::SeekParams;
use crate::synde::{crop_matrix, decode, decode_pipeline, DecodeParams, DecodeResult, Pipeline};
use crate::trellis::SyndromeTrellis;

/// How a read's primer is found before decoding.
#[derive(Debug, Clone, PartialEq)]
pub enum Locate {
    Seek(SeekParams),
    /// Crop at the simulator's alignment (isolates the decoder).
    Truth,
}

/// One batch configuration. The channel seed is replaced per read.
#[derive(Debug, Clone)]
pub struct BatchSpec<'a> {
    pub code: &'a Code,
    pub trellis: &'a SyndromeTrellis,
    pub left: QuaternaryWord,
    pub right: QuaternaryWord,
    pub channel: ChannelParams,
    pub kind: MatrixKind,
    pub flanks: (usize, usize),
    pub locate: Locate,
    pub decode: DecodeParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadOutcome {
    pub read_id: usize,
    pub seed: u64,
    pub message: BitVec,
    pub decoded: Option<BitVec>,
    /// `logprob / columns`; `-inf` when decoding failed.
    pub score: f64,
    pub position: Option<usize>,
    pub truth_position: usize,
    pub beam_extensions: u64,
    /// Columns the decoder processed.
    pub columns: usize,
}

impl ReadOutcome {
    pub fn failed(&self) -> bool {
        self.decoded.is_none()
    }

    pub fn correct(&self) -> bool {
        self.decoded.as_ref() == Some(&self.message)
    }
}

/// Seed of read `i` in a batch seeded with `base`.
pub fn read_seed(base: u64, i: usize) -> u64 {
    let mut z = base.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random message → payload → read → matrix, all from one seed.
pub fn simulate_read(spec: &BatchSpec, seed: u64) -> Result<(BitVec, SimulatedRead)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.code.message_bits();
    let bits: Vec<u8> = (0..k).map(|_| rng.random_range(0..2u8)).collect();
    let message = BitVec::from_bits(&bits);
    let payload = spec.code.payload_for_message(&message)?;
    let scenario = compose_read(&payload, &spec.left, &spec.right, spec.flanks, &mut rng)?;
    let channel = ChannelParams {
        seed: rng.next_u64(),
        ..spec.channel.clone()
    };
    Ok((
        message,
        SimulatedRead::simulate(scenario, &channel, spec.kind)?,
    ))
}

pub fn run_read(spec: &BatchSpec, read_id: usize, seed: u64) -> Result<ReadOutcome> {
    let (message, read) = simulate_read(spec, seed)?;
    let truth_position = read.primer_column();
    let result: DecodeResult = match &spec.locate {
        Locate::Truth => {
            let cropped = crop_matrix(&read.matrix, truth_position)?;
            let mut r = decode(
                &cropped,
                spec.code,
                spec.trellis,
                &spec.left,
                &spec.right,
                &spec.decode,
            )?;
            r.position = Some(truth_position);
            r
        }
        Locate::Seek(seek) => {
            let pipe = Pipeline {
                code: spec.code,
                trellis: spec.trellis,
                left: &spec.left,
                right: &spec.right,
                seek: seek.clone(),
                decode: spec.decode.clone(),
                threshold: f64::NEG_INFINITY,
            };
            decode_pipeline(&read.matrix, &pipe)?
        }
    };
    Ok(ReadOutcome {
        read_id,
        seed,
        message,
        decoded: result.message_bits,
        score: result.score,
        position: result.position,
        truth_position,
        beam_extensions: result.beam_extensions,
        columns: result.columns,
    })
}

/// Decodes `n_reads` reads in parallel; results are in read order.
pub fn run_batch(spec: &BatchSpec, n_reads: usize, base_seed: u64) -> Result<Vec<ReadOutcome>> {
    if n_reads == 0 {
        return Err(Error::InvalidArgument("n_reads must be at least 1".into()));
    }
    (0..n_reads)
        .into_par_iter()
        .map(|i| run_read(spec, i, read_seed(base_seed, i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub threshold: f64,
    pub discard_fraction: f64,
    /// Frame error rate among accepted reads (0 when none remain).
    pub fer: f64,
    pub n_remaining: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalCurve {
    pub points: Vec<CurvePoint>,
}

/// Discard fraction and FER among the remaining reads at each threshold.
/// Failed decodes are always discarded.
pub fn fer_vs_discard(results: &[ReadOutcome], thresholds: &[f64]) -> Result<EvalCurve> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "thresholds must be ascending".into(),
        ));
    }
    let n = results.len();
    let points = thresholds
        .iter()
        .map(|&threshold| {
            let kept: Vec<&ReadOutcome> = results
                .iter()
                .filter(|r| !r.failed() && r.score >= threshold)
                .collect();
            let errors = kept.iter().filter(|r| !r.correct()).count();
            let n_remaining = kept.len();
            CurvePoint {
                threshold,
                discard_fraction: if n == 0 {
                    0.0
                } else {
                    1.0 - n_remaining as f64 / n as f64
                },
                fer: if n_remaining == 0 {
                    0.0
                } else {
                    errors as f64 / n_remaining as f64
                },
                n_remaining,
                errors,
            }
        })
        .collect();
    Ok(EvalCurve { points })
}

/// `points` thresholds at the score quantiles `0, 1/points, ...` of the
/// successful decodes.
pub fn score_quantiles(results: &[ReadOutcome], points: usize) -> Vec<f64> {
    let mut scores: Vec<f64> = results
        .iter()
        .filter(|r| !r.failed())
        .map(|r| r.score)
        .collect();
    if scores.is_empty() {
        return vec![f64::NEG_INFINITY; points];
    }
    scores.sort_by(f64::total_cmp);
    (0..points)
        .map(|i| scores[(i * scores.len() / points).min(scores.len() - 1)])
        .collect()
}

/// Adjacent pairs `(i, i+1)` whose FER rise is significant at level
/// `alpha` under a one-sided binomial test against the FER at `i`.
pub fn fer_rise_violations(curve: &EvalCurve, alpha: f64) -> Vec<usize> {
    curve
        .points
        .windows(2)
        .enumerate()
        .filter(|(_, w)| {
            let (a, b) = (w[0], w[1]);
            if b.n_remaining == 0 || b.errors == 0 || b.fer <= a.fer {
                return false;
            }
            // P(X >= errors) for X ~ Bin(n, fer_a).
            let p_value = match Binomial::new(a.fer, b.n_remaining as u64) {
                Ok(d) if b.errors > 0 => 1.0 - d.cdf(b.errors as u64 - 1),
                _ => 1.0,
            };
            p_value < alpha
        })
        .map(|(i, _)| i)
        .collect()
}

/// For each Δ, the fraction of reads whose estimates differ by more than
/// Δ. A missing estimate on either side counts as a disagreement.
pub fn agreement_curve(
    a: &[Option<usize>],
    b: &[Option<usize>],
    deltas: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let n = a.len().max(1) as f64;
    Ok(deltas
        .iter()
        .map(|&d| {
            let off = a
                .iter()
                .zip(b)
                .filter(|(x, y)| match (x, y) {
                    (Some(x), Some(y)) => x.abs_diff(*y) > d,
                    _ => true,
                })
                .count();
            (d, off as f64 / n)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub code_id: String,
    pub w: usize,
    /// Beam extensions per processed matrix column.
    pub mean_beam_complexity: f64,
    pub payload_len: usize,
    pub nu: usize,
}

pub fn complexity_report(code: &CodeSpec, w: usize, results: &[ReadOutcome]) -> ComplexityReport {
    let ext: u64 = results.iter().map(|r| r.beam_extensions).sum();
    let cols: usize = results.iter().map(|r| r.columns).sum();
    ComplexityReport {
        code_id: code.identifier.clone(),
        w,
        mean_beam_complexity: if cols == 0 {
            0.0
        } else {
            ext as f64 / cols as f64
        },
        payload_len: code.payload_symbols(),
        nu: code.nu,
    }
}

/// Least-squares line: `(slope, intercept, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, my - slope * mx, r2)
}

pub fn eval_tsv(curve: &EvalCurve) -> String {
    let mut out = String::from("threshold\tdiscard_pct\tfer\tn\n");
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{:.6}\t{:.4}\t{:.6}\t{}",
            p.threshold,
            100.0 * p.discard_fraction,
            p.fer,
            p.n_remaining
        );
    }
    out
}

pub fn agreement_tsv(curve: &[(usize, f64)]) -> String {
    let mut out = String::from("delta\tfraction_beyond\n");
    for (d, f) in curve {
        let _ = writeln!(out, "{d}\t{f:.6}");
    }
    out
}

pub fn complexity_tsv(reports: &[ComplexityReport]) -> String {
    let mut out = String::from("code_id\tw\tnu\tpayload_len\tmean_beam_complexity\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.4}",
            r.code_id, r.w, r.nu, r.payload_len, r.mean_beam_complexity
        );
    }
    out
}

pub const DECODE_TSV_HEADER: &str =
    "read_id\tposition\tmessage_hex\tscore\taccepted\tbeam_extensions";

pub fn decode_tsv_row(read_id: &str, r: &DecodeResult) -> String {
    let position = r
        .position
        .map_or_else(|| "-".to_string(), |p| p.to_string());
    let message = r
        .message_bits
        .as_ref()
        .map_or_else(|| "-".to_string(), BitVec::to_hex);
    format!(
        "{read_id}\t{position}\t{message}\t{:.6}\t{}\t{}",
        r.score, r.accepted as u8, r.beam_extensions
    )
}

/// Per-read outcomes of a batch, for archiving.
pub fn outcomes_tsv(results: &[ReadOutcome]) -> String {
    let mut out = String::from("read_id\tseed\tposition\ttruth_position\tmessage_hex\tdecoded_hex\tscore\tcorrect\tbeam_extensions\tcolumns\n");
    for r in results {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{}\t{}\t{}",
            r.read_id,
            r.seed,
            r.position
                .map_or_else(|| "-".to_string(), |p| p.to_string()),
            r.truth_position,
            r.message.to_hex(),
            r.decoded
                .as_ref()
                .map_or_else(|| "-".to_string(), BitVec::to_hex),
            r.score,
            r.correct() as u8,
            r.beam_extensions,
            r.columns
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::example_spec;
    use crate::trellis::build_code_trellis;

    fn outcome(id: usize, score: f64, correct: bool) -> ReadOutcome {
        let message = BitVec::from_bits(&[1, 0]);
        let decoded = if score == f64::NEG_INFINITY {
            None
        } else if correct {
            Some(message.clone())
        } else {
            Some(BitVec::from_bits(&[0, 1]))
        };
        ReadOutcome {
            read_id: id,
            seed: id as u64,
            message,
            decoded,
            score,
            position: Some(0),
            truth_position: 0,
            beam_extensions: 10,
            columns: 5,
        }
    }

    #[test]
    fn curve_edges() {
        let rs = vec![
            outcome(0, -1.0, true),
            outcome(1, -2.0, false),
            outcome(2, -3.0, true),
            outcome(3, f64::NEG_INFINITY, false),
        ];
        let c = fer_vs_discard(&rs, &[f64::NEG_INFINITY, -2.5, -1.5, 0.0]).unwrap();
        let p = &c.points;
        assert_eq!(p[0].discard_fraction, 0.25);
        assert!((p[0].fer - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!((p[1].n_remaining, p[1].errors), (2, 1));
        assert_eq!((p[2].fer, p[2].n_remaining), (0.0, 1));
        assert_eq!(
            (p[3].discard_fraction, p[3].fer, p[3].n_remaining),
            (1.0, 0.0, 0)
        );
        assert!(p
            .windows(2)
            .all(|w| w[0].discard_fraction <= w[1].discard_fraction));
        assert!(fer_vs_discard(&rs, &[0.0, -1.0]).is_err());
        let q = score_quantiles(&rs, 3);
        assert_eq!(q, vec![-3.0, -2.0, -1.0]);
    }

    #[test]
    fn rise_test_flags_only_clear_increases() {
        let pt = |fer: f64, n: usize| CurvePoint {
            threshold: 0.0,
            discard_fraction: 0.0,
            fer,
            n_remaining: n,
            errors: (fer * n as f64).round() as usize,
        };
        let curve = EvalCurve {
            points: vec![pt(0.1, 1000), pt(0.12, 500), pt(0.5, 100), pt(0.0, 50)],
        };
        assert_eq!(fer_rise_violations(&curve, 0.01), vec![1]);
    }

    #[test]
    fn agreement_edges() {
        let a: Vec<Option<usize>> = (0..10).map(Some).collect();
        let shifted: Vec<Option<usize>> = (0..10).map(|x| Some(x + 10)).collect();
        for (_, f) in agreement_curve(&a, &a, &[0, 1, 50]).unwrap() {
            assert_eq!(f, 0.0);
        }
        let c = agreement_curve(&a, &shifted, &[0, 9, 10, 11]).unwrap();
        assert_eq!(
            c.iter().map(|x| x.1).collect::<Vec<_>>(),
            vec![1.0, 1.0, 0.0, 0.0]
        );
        assert!(agreement_curve(&a, &a[..3], &[0]).is_err());
        let none = vec![None; 10];
        assert_eq!(agreement_curve(&a, &none, &[1000]).unwrap()[0].1, 1.0);
    }

    #[test]
    fn complexity_of_one_read() {
        let spec = example_spec();
        let r = complexity_report(&spec, 8, &[outcome(0, -1.0, true)]);
        assert_eq!(r.mean_beam_complexity, 2.0);
        assert_eq!((r.nu, r.payload_len), (3, 5));
        let (slope, icpt, r2) = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!(
            (slope - 2.0).abs() < 1e-12 && (icpt - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12
        );
    }

    #[test]
    fn batches_are_reproducible_and_noiseless_is_exact() {
        let code = Code::new(example_spec()).unwrap();
        let trellis = build_code_trellis(&code).unwrap();
        let spec = BatchSpec {
            code: &code,
            trellis: &trellis,
            left: "ACGTTGCAAGCT".parse().unwrap(),
            right: "TTGCAGCA".parse().unwrap(),
            channel: ChannelParams::noiseless(0),
            kind: MatrixKind::Ctc5,
            flanks: (20, 20),
            locate: Locate::Seek(SeekParams {
                s: 1,
                tau: 1.0,
                bound_by_best: false,
                ..SeekParams::ctc_default()
            }),
            decode: DecodeParams::with_beams(64),
        };
        let one = run_batch(&spec, 1, 9).unwrap();
        let c = fer_vs_discard(&one, &[f64::NEG_INFINITY]).unwrap();
        assert_eq!((c.points[0].fer, c.points[0].n_remaining), (0.0, 1));
        let noisy = BatchSpec {
            channel: ChannelParams::r9_like(0),
            ..spec
        };
        let a = run_batch(&noisy, 6, 3).unwrap();
        let b = run_batch(&noisy, 6, 3).unwrap();
        assert_eq!(outcomes_tsv(&a), outcomes_tsv(&b));
        assert!(run_batch(&noisy, 0, 3).is_err());
    }
}
