mod basefile;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;

use basefile::BaseFile;
use ygg_core::harness::{
    write_csv, CorpusSource, ExperimentConfig, SizeUnits, SyntheticCorpusSpec,
};
use ygg_core::{
    analysis, chunk, seeded_rng, ClientStore, CloudStore, DeletionStrategy, Error, Params,
    Result,
};

#[derive(Parser)]
#[command(name = "ygg", version, about = "Privacy-aware dual deduplication")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a deterministic log corpus
    Gen(GenArgs),
    /// Client side: raw file to base file plus client store
    Upload(UploadArgs),
    /// Cloud side: deduplicate a base file into a cloud store
    Compress(CompressArgs),
    /// Reconstruct one chunk through both stores
    Get(GetArgs),
    /// Evaluate the closed-form compression ratios
    Ratios(RatiosArgs),
    /// Preimage counts and the uncertainty metric
    Uncertainty(UncertaintyArgs),
    /// Run the full experiment grid and emit CSV
    Sweep(SweepArgs),
    /// Audit a full corpus roundtrip through existing stores
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UnitsArg {
    Bits,
    Symbols,
}

impl From<UnitsArg> for SizeUnits {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Bits => SizeUnits::Bits,
            UnitsArg::Symbols => SizeUnits::Symbols,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Uniform,
    Runbreaking,
}

impl From<StrategyArg> for DeletionStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Uniform => DeletionStrategy::UniformRandom,
            StrategyArg::Runbreaking => DeletionStrategy::RunBreaking,
        }
    }
}

/// Size flags shared by the single-configuration commands.
#[derive(Args)]
struct ParamArgs {
    #[arg(long, default_value_t = 8)]
    k: u8,
    /// Original chunk size, in bits or symbols per --units
    #[arg(long, default_value_t = 1024)]
    chunk_bits: u32,
    /// Base size after deletions; defaults to the chunk size
    #[arg(long)]
    base_bits: Option<u32>,
    #[arg(long, default_value_t = 0)]
    tau: u32,
    /// Per-record header overhead in bits
    #[arg(long, default_value_t = 64)]
    sh_bits: u16,
    #[arg(long, value_enum, default_value_t = UnitsArg::Bits)]
    units: UnitsArg,
}

impl ParamArgs {
    fn to_symbols(&self, size: u32) -> Result<u32> {
        match self.units {
            UnitsArg::Symbols => Ok(size),
            UnitsArg::Bits => {
                if size % self.k as u32 != 0 {
                    Err(Error::InvalidParams(format!(
                        "{size} bits not divisible by k={}",
                        self.k
                    )))
                } else {
                    Ok(size / self.k as u32)
                }
            }
        }
    }

    fn params(&self) -> Result<Params> {
        let n_o = self.to_symbols(self.chunk_bits)?;
        let n_b = self.to_symbols(self.base_bits.unwrap_or(self.chunk_bits))?;
        Params::new(self.k, n_o, n_b, self.tau, self.sh_bits)
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    lines: u64,
    #[arg(long, default_value_t = 4)]
    templates: usize,
    #[arg(long, default_value_t = 0.8)]
    ts_rate: f64,
    #[arg(long, default_value_t = 0.1)]
    block_rate: f64,
    #[arg(long, default_value_t = 0.05)]
    host_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UploadArgs {
    /// Raw input file
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Uniform)]
    strategy: StrategyArg,
    /// Where the client store is written
    #[arg(long)]
    client_store: PathBuf,
    /// Where the uploaded bases are written
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompressArgs {
    /// Base file produced by `upload`
    #[arg(long)]
    bases: PathBuf,
    #[arg(long, default_value_t = 0)]
    tau: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GetArgs {
    #[arg(long)]
    id: u64,
    #[arg(long)]
    client_store: PathBuf,
    #[arg(long)]
    cloud_store: PathBuf,
    #[arg(long, default_value_t = 0)]
    tau: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RatiosArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Base fraction N_b/N_f, as a decimal or a/b
    #[arg(long, default_value = "1")]
    r: String,
}

#[derive(Args)]
struct UncertaintyArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Print the whole (k, n_b, n_o) reference table instead
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory of corpus files; mutually exclusive with --lines
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Synthesize this many log lines instead of reading a directory
    #[arg(long)]
    lines: Option<u64>,
    #[arg(long, default_value_t = 4)]
    templates: usize,
    #[arg(long, default_value_t = 0.8)]
    ts_rate: f64,
    #[arg(long, default_value_t = 0.1)]
    block_rate: f64,
    #[arg(long, default_value_t = 0.05)]
    host_rate: f64,
    #[arg(long, value_delimiter = ',')]
    k: Vec<u8>,
    #[arg(long, default_value_t = 1024)]
    chunk_bits: u32,
    /// Base-size grid, comma separated
    #[arg(long, value_delimiter = ',')]
    base_bits: Vec<u32>,
    /// Threshold grid, comma separated
    #[arg(long, value_delimiter = ',')]
    tau: Vec<u32>,
    #[arg(long, default_value_t = 64)]
    sh_bits: u16,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = UnitsArg::Bits)]
    units: UnitsArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::Uniform)]
    strategy: StrategyArg,
    #[arg(long)]
    verify: bool,
    /// CSV output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// The original raw file
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    client_store: PathBuf,
    #[arg(long)]
    cloud_store: PathBuf,
    #[arg(long, default_value_t = 0)]
    tau: u32,
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidParams(format!("cannot parse '{s}' as a ratio"));
    if let Some((num, den)) = s.split_once('/') {
        let n = i64::from_str(num.trim()).map_err(|_| bad())?;
        let d = i64::from_str(den.trim()).map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(BigRational::new(n.into(), d.into()));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let int = if int.is_empty() { 0 } else { i64::from_str(int).map_err(|_| bad())? };
        if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = 10i64.pow(frac.len() as u32);
        let f = i64::from_str(frac).map_err(|_| bad())?;
        return Ok(BigRational::new((int * scale + f).into(), scale.into()));
    }
    Ok(BigRational::from_integer(i64::from_str(s.trim()).map_err(|_| bad())?.into()))
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Gen(a) => {
            let spec = SyntheticCorpusSpec {
                lines: a.lines,
                template_pool: a.templates,
                ts_mutation: a.ts_rate,
                block_mutation: a.block_rate,
                host_mutation: a.host_rate,
                seed: a.seed,
            };
            std::fs::write(&a.out, ygg_core::synthesize_corpus(&spec)?)?;
            Ok(())
        }
        Cmd::Upload(a) => {
            let params = a.params.params()?;
            let raw = std::fs::read(&a.input)?;
            let cf = chunk(&raw, &params)?;
            let mut rng = seeded_rng(a.seed);
            let mut client = ClientStore::new(params)?;
            let mut entries = Vec::with_capacity(cf.chunks.len());
            for f in &cf.chunks {
                let (id, base) = client.upload(a.strategy.into(), f, &mut rng)?;
                entries.push((id, base));
            }
            client.record_file(
                &a.input.to_string_lossy(),
                entries.iter().map(|(id, _)| *id).collect(),
                cf.original_bit_length,
            );
            client.save(&mut BufWriter::new(File::create(&a.client_store)?))?;
            let bf = BaseFile {
                k: params.k,
                n_o: params.n_o,
                n_b: params.n_b,
                s_h: params.s_h,
                entries,
            };
            bf.write(&mut BufWriter::new(File::create(&a.out)?))?;
            eprintln!("uploaded {} chunks", cf.chunks.len());
            Ok(())
        }
        Cmd::Compress(a) => {
            let bf = BaseFile::read(&mut BufReader::new(File::open(&a.bases)?))?;
            let mut cloud = CloudStore::new(bf.params(a.tau)?)?;
            for (id, base) in &bf.entries {
                cloud.compress(*id, base)?;
            }
            cloud.save(&mut BufWriter::new(File::create(&a.out)?))?;
            eprintln!(
                "{} chunks deduplicated into {} bases",
                cloud.records.len(),
                cloud.bases.len()
            );
            Ok(())
        }
        Cmd::Get(a) => {
            let client =
                ClientStore::load(&mut BufReader::new(File::open(&a.client_store)?), a.tau)?;
            let cloud =
                CloudStore::load(&mut BufReader::new(File::open(&a.cloud_store)?), a.tau)?;
            let restored = client.get(a.id, &cloud.decompress(a.id)?)?;
            std::fs::write(&a.out, restored.pack())?;
            Ok(())
        }
        Cmd::Ratios(a) => {
            let params = a.params.params()?;
            let r = parse_rational(&a.r)?;
            let report = ygg_core::RatioReport {
                ucr: analysis::ucr_formula(&params)?,
                ccr: analysis::ccr_formula(&params, &r)?,
                gcr: analysis::gcr_formula(&params, &r)?,
            };
            println!("{}", report.render());
            println!("client compresses (UCR < 1): {}", analysis::ucr_below_one(&params)?);
            match analysis::ccr_r_threshold(&params)? {
                Some(t) => println!(
                    "cloud compresses while r <= {} ({:.6})",
                    t,
                    t.to_f64().unwrap_or(f64::NAN)
                ),
                None => println!("cloud never compresses at this tau"),
            }
            Ok(())
        }
        Cmd::Uncertainty(a) => {
            if a.table {
                println!("k  n_b  n_o  preimages  uncertainty");
                for k in [2u8, 4, 8] {
                    for (n_b, n_o) in [(10u32, 15u32), (100, 150), (500, 1000)] {
                        let rep = analysis::uncertainty(k, n_o, n_b)?;
                        println!(
                            "{k}  {n_b}  {n_o}  {}  {}",
                            analysis::sci(
                                &BigRational::from_integer(rep.n_preimages.clone().into()),
                                3
                            ),
                            rep.u_metric_sci(3)
                        );
                    }
                }
                return Ok(());
            }
            let k = a.params.k;
            let n_o = a.params.to_symbols(a.params.chunk_bits)?;
            let n_b = a.params.to_symbols(a.params.base_bits.unwrap_or(a.params.chunk_bits))?;
            let rep = analysis::uncertainty(k, n_o, n_b)?;
            println!("preimages = {}", rep.n_preimages);
            println!("lower bound = {}", rep.lower_bound);
            println!("uncertainty = {}", rep.u_metric_sci(3));
            Ok(())
        }
        Cmd::Sweep(a) => {
            let source = match (&a.corpus, a.lines) {
                (Some(dir), None) => CorpusSource::Directory(dir.clone()),
                (None, Some(lines)) => CorpusSource::Synthetic(SyntheticCorpusSpec {
                    lines,
                    template_pool: a.templates,
                    ts_mutation: a.ts_rate,
                    block_mutation: a.block_rate,
                    host_mutation: a.host_rate,
                    seed: a.seed,
                }),
                _ => {
                    return Err(Error::InvalidParams(
                        "pass exactly one of --corpus and --lines".into(),
                    ))
                }
            };
            let config = ExperimentConfig {
                source,
                chunk_size: a.chunk_bits,
                base_sizes: a.base_bits.clone(),
                ks: a.k.clone(),
                taus: a.tau.clone(),
                s_h: a.sh_bits,
                seed: a.seed,
                units: a.units.into(),
                strategy: a.strategy.into(),
                verify: a.verify,
            };
            let outcome = ygg_core::sweep(&config)?;
            for line in &outcome.skipped {
                eprintln!("{line}");
            }
            for ((k, n_b), tau) in outcome.best_taus() {
                eprintln!("best tau for k={k} n_b={n_b}: {tau}");
            }
            match &a.out {
                Some(path) => write_csv(&outcome.rows, &mut BufWriter::new(File::create(path)?))?,
                None => write_csv(&outcome.rows, &mut std::io::stdout().lock())?,
            }
            Ok(())
        }
        Cmd::Verify(a) => {
            let client =
                ClientStore::load(&mut BufReader::new(File::open(&a.client_store)?), a.tau)?;
            let cloud =
                CloudStore::load(&mut BufReader::new(File::open(&a.cloud_store)?), a.tau)?;
            let raw = std::fs::read(&a.input)?;
            let cf = chunk(&raw, &client.params)?;
            for (i, original) in cf.chunks.iter().enumerate() {
                let id = i as u64;
                let restored = client.get(id, &cloud.decompress(id)?)?;
                if restored != *original {
                    return Err(Error::VerificationFailed(id));
                }
            }
            eprintln!("verified {} chunks", cf.chunks.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::VerificationFailed(_) => 2,
                Error::Corrupted(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
