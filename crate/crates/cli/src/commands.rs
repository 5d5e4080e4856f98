//! Subcommand implementations. Every command renders its full output into
//! memory before anything is written, so a failure never leaves a partial file.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use usm::encoder::{DEFAULT_EPSILON, DEFAULT_MAX_PASSES, DEFAULT_PRECISION_HORIZON};
use usm::similarity::DEFAULT_CAP;
use usm::{
    crosstab, decode, density_at, encode, export_grid, Alphabet, Binner, Direction, EncoderConfig,
    GridFormat, SeedMode, UsmMap,
};

use crate::fasta::{self, Normalize, SequenceRecord, Source};

#[derive(Debug, Parser)]
#[command(
    name = "usm",
    version,
    about = "Universal sequence maps: encode, decode, bin and compare sequences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-position forward and backward coordinates.
    Encode(EncodeArgs),
    /// Symbols held by a coordinate.
    Decode(DecodeArgs),
    /// Density grid (k-mer table) of one map direction, or a point density.
    Fcgr(FcgrArgs),
    /// Similar-length table between every position pair of two sequences.
    Crosstab(CrosstabArgs),
    /// Encode and binning wall times.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeedModeArg {
    Midpoint,
    Circular,
    Bidirectional,
}

impl From<SeedModeArg> for SeedMode {
    fn from(m: SeedModeArg) -> Self {
        match m {
            SeedModeArg::Midpoint => SeedMode::Midpoint,
            SeedModeArg::Circular => SeedMode::Circular,
            SeedModeArg::Bidirectional => SeedMode::Bidirectional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Backward,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Forward => Direction::Forward,
            DirectionArg::Backward => Direction::Backward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Pgm,
}

/// Where sequences come from and how they are cleaned up.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// FASTA or raw sequence files; `-` or nothing reads standard input.
    pub inputs: Vec<PathBuf>,
    /// Inline sequence, used instead of files (repeatable).
    #[arg(long = "seq", value_name = "SEQUENCE")]
    pub seqs: Vec<String>,
    /// Only use the records with these ids, in this order (repeatable).
    #[arg(long = "record", value_name = "ID")]
    pub records: Vec<String>,
    /// Alphabet symbols; defaults to the union of the selected records.
    #[arg(long)]
    pub alphabet: Option<String>,
    /// Upper-case residues before anything else.
    #[arg(long)]
    pub uppercase: bool,
    /// Drop symbols outside --alphabet instead of failing.
    #[arg(long)]
    pub skip_unknown: bool,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    #[arg(long, value_enum, default_value = "bidirectional")]
    pub seed_mode: SeedModeArg,
    /// Convergence tolerance between successive passes.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_PASSES)]
    pub max_passes: usize,
}

impl SeedArgs {
    fn config(&self) -> EncoderConfig {
        EncoderConfig {
            seed_mode: self.seed_mode.into(),
            epsilon: self.epsilon,
            max_passes: self.max_passes,
            precision_horizon: DEFAULT_PRECISION_HORIZON,
        }
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Comma-separated coordinate, one value per dimension.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub coords: Vec<f64>,
    /// Number of symbols to recover.
    #[arg(long)]
    pub depth: usize,
    #[arg(long)]
    pub alphabet: String,
    /// Map the coordinate came from; symbols are printed in sequence order.
    #[arg(long, value_enum, default_value = "forward")]
    pub direction: DirectionArg,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FcgrArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Grid resolution: 2^k cells per dimension.
    #[arg(long, conflicts_with = "k_real", required_unless_present = "k_real")]
    pub k: Option<u32>,
    /// Count positions within 2^-k_real of --query instead of building a grid.
    #[arg(long, requires = "query")]
    pub k_real: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub query: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "forward")]
    pub direction: DirectionArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrosstabArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Benchmark a random DNA sequence of this length instead of reading input.
    #[arg(long, value_name = "LENGTH")]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub rng_seed: u64,
    #[arg(long, default_value_t = 8)]
    pub k: u32,
    #[arg(long, value_enum, default_value = "forward")]
    pub direction: DirectionArg,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Fcgr(a) => cmd_fcgr(a),
        Command::Crosstab(a) => cmd_crosstab(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Records selected by `args`, normalized, with the alphabet they share.
pub fn load(args: &InputArgs) -> Result<(Vec<SequenceRecord>, Alphabet)> {
    let mut records = Vec::new();
    for (n, s) in args.seqs.iter().enumerate() {
        let mut r = fasta::parse_fasta(s.as_bytes(), Source::Inline)?;
        ensure!(r.len() == 1, "--seq must hold exactly one sequence");
        r[0].id = format!("seq{}", n + 1);
        records.append(&mut r);
    }
    if args.seqs.is_empty() || !args.inputs.is_empty() {
        records.extend(read_inputs(&args.inputs)?);
    }

    if !args.records.is_empty() {
        records = args
            .records
            .iter()
            .map(|id| {
                records
                    .iter()
                    .find(|r| &r.id == id)
                    .cloned()
                    .ok_or_else(|| anyhow!("no record with id {id:?}"))
            })
            .collect::<Result<_>>()?;
    }

    let explicit = match &args.alphabet {
        Some(s) => {
            let symbols: Vec<char> = s.chars().collect();
            let symbols = if args.uppercase {
                symbols.iter().flat_map(|c| c.to_uppercase()).collect()
            } else {
                symbols
            };
            Some(Alphabet::from_symbols(symbols).context("--alphabet")?)
        }
        None => None,
    };
    let norm = Normalize {
        uppercase: args.uppercase,
        skip_unknown: args.skip_unknown,
    };
    let dropped = fasta::normalize(&mut records, norm, explicit.as_ref())?;
    for (r, d) in records.iter().zip(dropped) {
        if d > 0 {
            eprintln!(
                "usm: dropped {d} symbols outside the alphabet from {:?}",
                r.id
            );
        }
    }
    let alphabet = match explicit {
        Some(a) => a,
        None => fasta::union_alphabet(&records)?,
    };
    Ok((records, alphabet))
}

fn read_inputs(paths: &[PathBuf]) -> Result<Vec<SequenceRecord>> {
    if paths.is_empty() {
        return read_stdin();
    }
    let mut out = Vec::new();
    for p in paths {
        if p.as_os_str() == "-" {
            out.extend(read_stdin()?);
            continue;
        }
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        let recs = fasta::parse_fasta(BufReader::new(f), Source::File(p.display().to_string()))
            .with_context(|| p.display().to_string())?;
        out.extend(recs);
    }
    Ok(out)
}

fn read_stdin() -> Result<Vec<SequenceRecord>> {
    let mut buf = Vec::new();
    io::stdin()
        .read_to_end(&mut buf)
        .context("reading standard input")?;
    fasta::parse_fasta(&buf[..], Source::Stdin).context("standard input")
}

fn encode_record(
    r: &SequenceRecord,
    alphabet: &Alphabet,
    config: &EncoderConfig,
) -> Result<UsmMap> {
    let map =
        encode(&r.residues, alphabet, config).with_context(|| format!("record {:?}", r.id))?;
    if !map.converged() {
        eprintln!(
            "usm: record {:?} did not converge within {} passes",
            r.id, config.max_passes
        );
    }
    Ok(map)
}

/// Writes `bytes` to `path`, or standard output. A failed write removes the file.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            let res = File::create(p).and_then(|mut f| f.write_all(bytes).and_then(|_| f.flush()));
            if let Err(e) = res {
                let _ = fs::remove_file(p);
                return Err(e).with_context(|| format!("writing {}", p.display()));
            }
            Ok(())
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .context("writing standard output")
        }
    }
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let (records, alphabet) = load(&a.input)?;
    let config = a.seed.config();
    config.validate()?;
    let maps = records
        .iter()
        .map(|r| encode_record(r, &alphabet, &config))
        .collect::<Result<Vec<_>>>()?;
    let bytes = match a.format {
        Format::Csv => encode_csv(&records, &maps).into_bytes(),
        Format::Json => encode_json(&records, &maps, &config)?,
        Format::Pgm => bail!("encode writes csv or json"),
    };
    emit(a.output.as_deref(), &bytes)
}

/// `position,symbol,f1..fh,b1..bh` with 1-based positions, prefixed by a
/// `record` column when there is more than one record. Values use the shortest
/// decimal that parses back to the same binary64.
pub fn encode_csv(records: &[SequenceRecord], maps: &[UsmMap]) -> String {
    let multi = records.len() > 1;
    let h = maps.first().map_or(0, UsmMap::dim);
    let mut s = String::new();
    if multi {
        s.push_str("record,");
    }
    s.push_str("position,symbol");
    for j in 1..=h {
        write!(s, ",f{j}").unwrap();
    }
    for j in 1..=h {
        write!(s, ",b{j}").unwrap();
    }
    s.push('\n');
    for (r, map) in records.iter().zip(maps) {
        for (i, sym) in map.sequence().iter().enumerate() {
            if multi {
                write!(s, "{},", r.id).unwrap();
            }
            write!(s, "{},{}", i + 1, sym).unwrap();
            for v in map.forward_at(i).iter().chain(map.backward_at(i)) {
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        }
    }
    s
}

#[derive(Serialize)]
struct EncodedRecord<'a> {
    id: &'a str,
    alphabet: String,
    dim: usize,
    seed_mode: SeedMode,
    epsilon: f64,
    max_passes: usize,
    passes_used: usize,
    converged: bool,
    last_delta: Option<f64>,
    positions: Vec<EncodedPosition<'a>>,
}

#[derive(Serialize)]
struct EncodedPosition<'a> {
    position: usize,
    symbol: char,
    forward: &'a [f64],
    backward: &'a [f64],
}

fn encode_json(
    records: &[SequenceRecord],
    maps: &[UsmMap],
    config: &EncoderConfig,
) -> Result<Vec<u8>> {
    let out: Vec<EncodedRecord> = records
        .iter()
        .zip(maps)
        .map(|(r, m)| EncodedRecord {
            id: &r.id,
            alphabet: m.alphabet().symbols().iter().collect(),
            dim: m.dim(),
            seed_mode: m.seed_mode(),
            epsilon: config.epsilon,
            max_passes: config.max_passes,
            passes_used: m.passes_used(),
            converged: m.converged(),
            last_delta: m.last_delta(),
            positions: m
                .sequence()
                .iter()
                .enumerate()
                .map(|(i, &symbol)| EncodedPosition {
                    position: i + 1,
                    symbol,
                    forward: m.forward_at(i),
                    backward: m.backward_at(i),
                })
                .collect(),
        })
        .collect();
    let mut bytes = serde_json::to_vec_pretty(&out)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn cmd_decode(a: DecodeArgs) -> Result<()> {
    let alphabet = Alphabet::from_symbols(a.alphabet.chars()).context("--alphabet")?;
    let mut symbols = decode(&a.coords, a.depth, &alphabet, DEFAULT_PRECISION_HORIZON)?;
    // decoding yields the most recently consumed symbol first
    if a.direction == DirectionArg::Forward {
        symbols.reverse();
    }
    let mut line: String = symbols.into_iter().collect();
    line.push('\n');
    emit(a.output.as_deref(), line.as_bytes())
}

fn cmd_fcgr(a: FcgrArgs) -> Result<()> {
    let (records, alphabet) = load(&a.input)?;
    let config = a.seed.config();
    config.validate()?;
    let direction = a.direction.into();
    let multi = records.len() > 1;

    let bytes = if let Some(k_real) = a.k_real {
        ensure!(
            a.format == Format::Csv,
            "point densities are written as csv"
        );
        let query = a.query.as_deref().unwrap_or_default();
        let mut s = String::from("record,count\n");
        for r in &records {
            let map = encode_record(r, &alphabet, &config)?;
            writeln!(
                s,
                "{},{}",
                r.id,
                density_at(&map, direction, query, k_real)?
            )
            .unwrap();
        }
        s.into_bytes()
    } else {
        let k = a.k.expect("clap requires --k without --k-real");
        let format = match a.format {
            Format::Csv => GridFormat::Csv,
            Format::Pgm => GridFormat::Pgm,
            Format::Json => bail!("fcgr writes csv or pgm"),
        };
        ensure!(
            !(multi && format == GridFormat::Pgm),
            "pgm output takes a single record; select one with --record"
        );
        let mut out = Vec::new();
        for (n, r) in records.iter().enumerate() {
            let map = encode_record(r, &alphabet, &config)?;
            let grid = Binner::new(k).bin(&map, direction)?;
            let bytes = export_grid(&grid, format)?;
            if !multi {
                out = bytes;
                continue;
            }
            // prefix each csv row with the record id, keeping a single header
            let text = String::from_utf8(bytes).expect("csv is utf-8");
            let mut lines = text.lines();
            let header = lines.next().unwrap_or_default();
            if n == 0 {
                writeln!(out, "record,{header}")?;
            }
            for line in lines {
                writeln!(out, "{},{line}", r.id)?;
            }
        }
        out
    };
    emit(a.output.as_deref(), &bytes)
}

fn cmd_crosstab(a: CrosstabArgs) -> Result<()> {
    ensure!(a.format == Format::Csv, "crosstab writes csv");
    let (records, alphabet) = load(&a.input)?;
    ensure!(
        records.len() == 2,
        "crosstab needs exactly two sequences, got {}",
        records.len()
    );
    let config = a.seed.config();
    config.validate()?;
    let ma = encode_record(&records[0], &alphabet, &config)?;
    let mb = encode_record(&records[1], &alphabet, &config)?;
    let table = crosstab(&ma, &mb, DEFAULT_CAP)?;
    let mut out = Vec::new();
    table.write_csv(&mut out, ma.sequence(), mb.sequence())?;
    emit(a.output.as_deref(), &out)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let config = a.seed.config();
    config.validate()?;
    let (record, alphabet) = match a.random {
        Some(n) => {
            ensure!(n > 0, "--random needs a positive length");
            let seq = random_dna(n, a.rng_seed);
            let abc = match &a.input.alphabet {
                Some(s) => Alphabet::from_symbols(s.chars())?,
                None => Alphabet::from_symbols("ACGT".chars())?,
            };
            let r = SequenceRecord {
                id: format!("random{n}"),
                residues: seq,
                source: Source::Inline,
            };
            (r, abc)
        }
        None => {
            let (mut records, abc) = load(&a.input)?;
            ensure!(
                records.len() == 1,
                "bench takes one record, got {}; select one with --record",
                records.len()
            );
            (records.remove(0), abc)
        }
    };

    let t = Instant::now();
    let map = encode_record(&record, &alphabet, &config)?;
    let encode_ms = t.elapsed().as_secs_f64() * 1e3;
    let t = Instant::now();
    let grid = Binner::new(a.k).bin(&map, a.direction.into())?;
    let bin_ms = t.elapsed().as_secs_f64() * 1e3;

    let report = format!(
        "record {}\nsymbols {}\nseed_mode {}\npasses {}\nencode_ms {encode_ms:.3}\nk {}\ncells {}\nbin_ms {bin_ms:.3}\n",
        record.id,
        map.len(),
        map.seed_mode(),
        map.passes_used(),
        a.k,
        grid.counts().len(),
    );
    emit(a.output.as_deref(), report.as_bytes())
}

/// Uniform random DNA from a seeded generator.
pub fn random_dna(n: usize, seed: u64) -> Vec<char> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| b"ACGT"[rng.gen_range(0..4)] as char)
        .collect()
}
