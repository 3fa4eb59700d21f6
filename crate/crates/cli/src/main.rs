use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use synde::channel::{ChannelParams, MatrixKind, ProbabilityMatrix};
use synde::codebook::{parse_code_config, shipped_spec, Code, CodeSpec};
use synde::dna::QuaternaryWord;
use synde::gf2::BitVec;
use synde::harness::{
    agreement_curve, agreement_tsv, complexity_report, complexity_tsv, decode_tsv_row, eval_tsv,
    fer_vs_discard, outcomes_tsv, read_seed, run_batch, score_quantiles, simulate_read, BatchSpec,
    Locate, DECODE_TSV_HEADER,
};
use synde::oracle::ml_decode_bruteforce;
use synde::primerseek::{seek, SearchWindow, SeekParams};
use synde::synde::{
    accept, crop_matrix, decode, decode_pipeline, DecodeParams, MergeKey, MergeRule, Pipeline,
};
use synde::trellis::{build_code_trellis, SyndromeTrellis};

const DEFAULT_LEFT: &str = "ACGTTGCAAGCTTCAGGTACCATGC";
const DEFAULT_RIGHT: &str = "GATCCTAGGCATTGCACGTAAGCTT";

#[derive(Parser)]
#[command(
    name = "synde",
    version,
    about = "Trellis-guided decoding of nanopore probability matrices"
)]
struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write outputs here instead of stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate reads: one PMAT and ALN file per read plus truth.tsv.
    Simulate(SimulateArgs),
    /// Locate a primer in probability matrices.
    Seek(SeekArgs),
    /// Decode probability matrices.
    Decode(DecodeArgs),
    /// Brute-force maximum-likelihood decoding (small CTC codes only).
    Oracle(DecodeArgs),
    /// Simulate and decode a batch; write the FER-vs-discard curve.
    Eval(EvalArgs),
    /// Mean beam extensions per column for one or more codes.
    Bench(BenchArgs),
    /// Encode a message into a DNA payload.
    Encode(EncodeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Ctc,
    Kmer,
}

#[derive(Clone, Copy, ValueEnum)]
enum Merge {
    Sum,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum Key {
    Syndrome,
    Prefix,
}

#[derive(Clone, Copy, ValueEnum)]
enum Window {
    FirstHalf,
    Full,
}

#[derive(Args, Clone)]
struct CodeArgs {
    /// Code config file, or the identifier of a shipped code.
    #[arg(long, default_value = "CCM9-14")]
    code: String,
    #[arg(long, default_value = DEFAULT_LEFT)]
    left_primer: String,
    #[arg(long, default_value = DEFAULT_RIGHT)]
    right_primer: String,
}

#[derive(Args, Clone)]
struct ChannelArgs {
    #[arg(long, value_enum, default_value = "ctc")]
    mode: Mode,
    /// k-mer length in kmer mode.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Mean off-target mass per column.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Blank leakage in CTC base columns.
    #[arg(long, default_value_t = 0.05)]
    blank: f64,
    /// Mean dwell in samples per unit.
    #[arg(long, default_value_t = 10.0)]
    dwell: f64,
    /// Per-unit insertion and deletion probability.
    #[arg(long, default_value_t = 0.0)]
    indel: f64,
    /// Samples merged into one column.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Random bases before the left primer.
    #[arg(long, default_value_t = 0)]
    left_flank: usize,
    /// Random bases after the right primer.
    #[arg(long, default_value_t = 0)]
    right_flank: usize,
}

impl ChannelArgs {
    fn kind(&self) -> MatrixKind {
        match self.mode {
            Mode::Ctc => MatrixKind::Ctc5,
            Mode::Kmer => MatrixKind::Kmer(self.k),
        }
    }

    fn params(&self) -> ChannelParams {
        ChannelParams {
            mean_dwell: self.dwell,
            stride: self.stride,
            noise_eps: self.eps,
            blank_mass: self.blank,
            indel_prob: self.indel,
            seed: 0,
        }
    }
}

#[derive(Args, Clone)]
struct BeamArgs {
    /// Beams kept per column.
    #[arg(long, default_value_t = 512)]
    beams: usize,
    #[arg(long, value_enum, default_value = "sum")]
    merge: Merge,
    #[arg(long, value_enum, default_value = "syndrome")]
    key: Key,
    /// Mean unit duration, in columns, assumed by the search.
    #[arg(long, default_value_t = 10.0)]
    dwell_prior: f64,
    /// Score dwell and extension moves as free.
    #[arg(long)]
    no_duration: bool,
}

impl BeamArgs {
    fn params(&self) -> DecodeParams {
        DecodeParams {
            w: self.beams,
            merge: match self.merge {
                Merge::Sum => MergeRule::Sum,
                Merge::Max => MergeRule::Max,
            },
            key: match self.key {
                Key::Syndrome => MergeKey::Syndrome,
                Key::Prefix => MergeKey::Prefix,
            },
            dwell_prior: (!self.no_duration).then_some(self.dwell_prior),
            ..DecodeParams::default()
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Reads to simulate.
    #[arg(long, default_value_t = 10)]
    reads: usize,
}

#[derive(Args)]
struct SeekArgs {
    /// PMAT files.
    #[arg(long, required = true, num_args = 1..)]
    matrix: Vec<PathBuf>,
    /// Primer to look for.
    #[arg(long)]
    target: String,
    /// Defaults to the kind recorded in each matrix.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// k-mer length when seeking in kmer mode.
    #[arg(long)]
    k: Option<usize>,
    /// Beams kept per bucket.
    #[arg(long)]
    beams: Option<usize>,
    /// Subsampling factor; 1 disables the filter.
    #[arg(long)]
    subsample: Option<usize>,
    /// Probability mass kept by the concentration prune.
    #[arg(long)]
    tau: Option<f64>,
    /// Bucket shift between starts.
    #[arg(long)]
    delta: Option<usize>,
    /// Longest span a seek beam may reach, in columns.
    #[arg(long)]
    dmax: Option<usize>,
    /// Columns where a primer start may lie.
    #[arg(long, value_enum)]
    window: Option<Window>,
}

#[derive(Args)]
struct DecodeArgs {
    /// PMAT files.
    #[arg(long, required = true, num_args = 1..)]
    matrix: Vec<PathBuf>,
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    beam: BeamArgs,
    /// Minimum normalized score for acceptance.
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
    /// Locate the left primer first; otherwise column 0 is the primer start.
    #[arg(long)]
    seek: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    beam: BeamArgs,
    /// Reads to simulate.
    #[arg(long, default_value_t = 500)]
    reads: usize,
    /// Thresholds in the sweep (score quantiles).
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Locate primers with the seeker instead of cropping at the truth.
    #[arg(long)]
    seek: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Code configs or shipped identifiers.
    #[arg(long, num_args = 1.., default_values_t = ["CCM9-14".to_string()])]
    code: Vec<String>,
    /// Beam widths to measure.
    #[arg(long, num_args = 1.., default_values_t = [512usize])]
    beams: Vec<usize>,
    #[arg(long, default_value = DEFAULT_LEFT)]
    left_primer: String,
    #[arg(long, default_value = DEFAULT_RIGHT)]
    right_primer: String,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Reads to simulate per code.
    #[arg(long, default_value_t = 100)]
    reads: usize,
}

#[derive(Args)]
struct EncodeArgs {
    /// Code config file, or the identifier of a shipped code.
    #[arg(long, default_value = "CCM9-14")]
    code: String,
    /// Message bits as hex, first bit most significant.
    #[arg(long)]
    message: String,
    /// Also write the code's quaternary trellis to trellis.txt.
    #[arg(long)]
    dump_trellis: bool,
}

fn load_code(name: &str) -> Result<Code> {
    let spec: CodeSpec = if Path::new(name).is_file() {
        let text = fs::read_to_string(name).with_context(|| format!("reading {name}"))?;
        parse_code_config(&text).with_context(|| format!("parsing {name}"))?
    } else {
        shipped_spec(name)
            .with_context(|| format!("{name} is neither a file nor a shipped code"))?
    };
    Ok(Code::new(spec)?)
}

fn dna(s: &str) -> Result<QuaternaryWord> {
    s.parse().with_context(|| format!("bad DNA string {s:?}"))
}

fn read_matrix(path: &Path) -> Result<ProbabilityMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ProbabilityMatrix::from_pmat(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_id(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    /// Writes `name` into the output directory, or prints it.
    fn emit(&self, name: &str, content: &str) -> Result<()> {
        match &self.dir {
            Some(dir) => {
                let path = dir.join(name);
                fs::write(&path, content).with_context(|| format!("writing {}", path.display()))
            }
            None => {
                print!("{content}");
                Ok(())
            }
        }
    }
}

struct Loaded {
    code: Code,
    trellis: SyndromeTrellis,
    left: QuaternaryWord,
    right: QuaternaryWord,
}

impl Loaded {
    fn new(args: &CodeArgs) -> Result<Self> {
        Self::from_parts(&args.code, &args.left_primer, &args.right_primer)
    }

    fn from_parts(code: &str, left: &str, right: &str) -> Result<Self> {
        let code = load_code(code)?;
        let trellis = build_code_trellis(&code)?;
        Ok(Self {
            code,
            trellis,
            left: dna(left)?,
            right: dna(right)?,
        })
    }

    fn batch(&self, channel: &ChannelArgs, locate: Locate, decode: DecodeParams) -> BatchSpec<'_> {
        BatchSpec {
            code: &self.code,
            trellis: &self.trellis,
            left: self.left.clone(),
            right: self.right.clone(),
            channel: channel.params(),
            kind: channel.kind(),
            flanks: (channel.left_flank, channel.right_flank),
            locate,
            decode,
        }
    }
}

fn simulate_cmd(args: &SimulateArgs, seed: u64, out: &Output) -> Result<()> {
    let dir = out.dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let loaded = Loaded::new(&args.code)?;
    let spec = loaded.batch(&args.channel, Locate::Truth, DecodeParams::default());
    let width = args.reads.saturating_sub(1).to_string().len().max(3);
    let rows: Vec<String> = (0..args.reads)
        .into_par_iter()
        .map(|i| -> Result<String> {
            let s = read_seed(seed, i);
            let (message, read) = simulate_read(&spec, s)?;
            let name = format!("read_{i:0width$}");
            fs::write(dir.join(format!("{name}.pmat")), read.matrix.to_pmat())?;
            fs::write(dir.join(format!("{name}.aln")), read.alignment.to_aln())?;
            Ok(format!(
                "{name}\t{s}\t{}\t{}\n",
                message.to_hex(),
                read.primer_column()
            ))
        })
        .collect::<Result<_>>()?;
    let mut truth = String::from("read_id\tseed\tmessage_hex\tprimer_column\n");
    truth.extend(rows);
    fs::write(dir.join("truth.tsv"), truth)?;
    eprintln!("wrote {} reads to {}", args.reads, dir.display());
    Ok(())
}

fn seek_params(args: &SeekArgs, kind: MatrixKind) -> SeekParams {
    let kind = match (args.mode, args.k) {
        (Some(Mode::Ctc), _) => MatrixKind::Ctc5,
        (Some(Mode::Kmer), k) => MatrixKind::Kmer(k.unwrap_or(2)),
        (None, _) => kind,
    };
    let mut p = SeekParams::default_for(kind);
    p.w = args.beams.unwrap_or(p.w);
    p.s = args.subsample.unwrap_or(p.s);
    p.tau = args.tau.unwrap_or(p.tau);
    p.delta = args.delta.unwrap_or(p.delta);
    p.d_max = args.dmax.unwrap_or(p.d_max);
    if let Some(w) = args.window {
        p.window = match w {
            Window::FirstHalf => SearchWindow::FirstHalf,
            Window::Full => SearchWindow::Full,
        };
    }
    p
}

fn seek_cmd(args: &SeekArgs, out: &Output) -> Result<()> {
    let target = dna(&args.target)?;
    let rows: Vec<String> = args
        .matrix
        .par_iter()
        .map(|path| -> Result<String> {
            let m = read_matrix(path)?;
            let r = seek(&m, &target, &seek_params(args, m.kind()))?;
            let pos = r.position.map_or_else(|| "-".into(), |p| p.to_string());
            Ok(format!("{}\t{pos}\t{:.6}\n", read_id(path), r.score))
        })
        .collect::<Result<_>>()?;
    let mut tsv = String::from("read_id\tposition\tscore\n");
    tsv.extend(rows);
    out.emit("seek.tsv", &tsv)
}

/// Crops at the seeker's estimate when asked, otherwise at column 0.
fn locate(m: &ProbabilityMatrix, left: &QuaternaryWord, use_seek: bool) -> Result<Option<usize>> {
    if !use_seek {
        return Ok(Some(0));
    }
    Ok(seek(m, left, &SeekParams::default_for(m.kind()))?.position)
}

fn decode_cmd(args: &DecodeArgs, out: &Output) -> Result<()> {
    let loaded = Loaded::new(&args.code)?;
    let threshold = args.threshold.unwrap_or(f64::NEG_INFINITY);
    let params = args.beam.params();
    let rows: Vec<String> = args
        .matrix
        .par_iter()
        .map(|path| -> Result<String> {
            let m = read_matrix(path)?;
            let r = if args.seek {
                let pipe = Pipeline {
                    code: &loaded.code,
                    trellis: &loaded.trellis,
                    left: &loaded.left,
                    right: &loaded.right,
                    seek: SeekParams::default_for(m.kind()),
                    decode: params.clone(),
                    threshold,
                };
                decode_pipeline(&m, &pipe)?
            } else {
                let mut r = decode(
                    &m,
                    &loaded.code,
                    &loaded.trellis,
                    &loaded.left,
                    &loaded.right,
                    &params,
                )?;
                r.position = Some(0);
                accept(r, threshold)
            };
            Ok(decode_tsv_row(&read_id(path), &r) + "\n")
        })
        .collect::<Result<_>>()?;
    let mut tsv = format!("{DECODE_TSV_HEADER}\n");
    tsv.extend(rows);
    out.emit("decode.tsv", &tsv)
}

fn oracle_cmd(args: &DecodeArgs, out: &Output) -> Result<()> {
    let loaded = Loaded::new(&args.code)?;
    let threshold = args.threshold.unwrap_or(f64::NEG_INFINITY);
    let rows: Vec<String> = args
        .matrix
        .par_iter()
        .map(|path| -> Result<String> {
            let m = read_matrix(path)?;
            let id = read_id(path);
            let Some(position) = locate(&m, &loaded.left, args.seek)? else {
                return Ok(format!("{id}\t-\t-\t-inf\t0\t0\t0\t0\n"));
            };
            let m = crop_matrix(&m, position)?;
            let v = ml_decode_bruteforce(&m, &loaded.code, &loaded.left, &loaded.right)?;
            let message = loaded.code.message_from_payload(&v.best_word)?;
            // Same scale as the decoder: the duration prior is one constant
            // for every candidate.
            let units = loaded.left.len() + v.best_word.len() + loaded.right.len();
            let prior = args.beam.params().duration_logprior(units, m.t())?;
            let score = (v.best_logprob + prior) / m.t() as f64;
            let accepted = v.best_logprob > f64::NEG_INFINITY && score >= threshold;
            Ok(format!(
                "{id}\t{position}\t{}\t{score:.6}\t{}\t0\t{:.6}\t{}\n",
                message.to_hex(),
                accepted as u8,
                v.margin,
                v.unique as u8
            ))
        })
        .collect::<Result<_>>()?;
    let mut tsv = format!("{DECODE_TSV_HEADER}\tmargin\tunique\n");
    tsv.extend(rows);
    out.emit("oracle.tsv", &tsv)
}

fn eval_cmd(args: &EvalArgs, seed: u64, out: &Output) -> Result<()> {
    let loaded = Loaded::new(&args.code)?;
    let kind = args.channel.kind();
    let locate = if args.seek {
        Locate::Seek(SeekParams::default_for(kind))
    } else {
        Locate::Truth
    };
    let spec = loaded.batch(&args.channel, locate, args.beam.params());
    let results = run_batch(&spec, args.reads, seed)?;
    let curve = fer_vs_discard(&results, &score_quantiles(&results, args.points))?;
    out.emit("eval.tsv", &eval_tsv(&curve))?;
    if out.dir.is_some() {
        out.emit("reads.tsv", &outcomes_tsv(&results))?;
        if args.seek {
            let found: Vec<Option<usize>> = results.iter().map(|r| r.position).collect();
            let truth: Vec<Option<usize>> =
                results.iter().map(|r| Some(r.truth_position)).collect();
            let deltas: Vec<usize> = (0..=100).step_by(5).collect();
            out.emit(
                "agreement.tsv",
                &agreement_tsv(&agreement_curve(&found, &truth, &deltas)?),
            )?;
        }
    }
    Ok(())
}

fn bench_cmd(args: &BenchArgs, seed: u64, out: &Output) -> Result<()> {
    let mut reports = Vec::new();
    for name in &args.code {
        let loaded = Loaded::from_parts(name, &args.left_primer, &args.right_primer)?;
        for &w in &args.beams {
            let spec = loaded.batch(&args.channel, Locate::Truth, DecodeParams::with_beams(w));
            let results = run_batch(&spec, args.reads, seed)?;
            reports.push(complexity_report(&loaded.code.spec, w, &results));
        }
    }
    out.emit("bench.tsv", &complexity_tsv(&reports))
}

fn encode_cmd(args: &EncodeArgs, out: &Output) -> Result<()> {
    let code = load_code(&args.code)?;
    let message = BitVec::from_hex(&args.message, code.message_bits())
        .with_context(|| format!("message must be {} bits of hex", code.message_bits()))?;
    let payload = code.payload_for_message(&message)?;
    out.emit("payload.txt", &format!("{payload}\n"))?;
    if args.dump_trellis {
        let dump = build_code_trellis(&code)?.dump();
        let mut text = String::new();
        let _ = writeln!(
            text,
            "# {} quaternary trellis: level from symbol to",
            code.spec.identifier
        );
        text.push_str(&dump);
        out.emit("trellis.txt", &text)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    if let Some(dir) = &cli.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let out = Output {
        dir: cli.out_dir.clone(),
    };
    match &cli.command {
        Command::Simulate(a) => simulate_cmd(a, cli.seed, &out),
        Command::Seek(a) => seek_cmd(a, &out),
        Command::Decode(a) => decode_cmd(a, &out),
        Command::Oracle(a) => oracle_cmd(a, &out),
        Command::Eval(a) => eval_cmd(a, cli.seed, &out),
        Command::Bench(a) => bench_cmd(a, cli.seed, &out),
        Command::Encode(a) => encode_cmd(a, &out),
    }
}
