//! Experiment driver: corpus synthesis and ingestion, full pipeline runs,
//! and parameter sweeps over (k, n_b, tau) with CSV emission.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;

use crate::analysis::{measured_ratios, ucr_formula};
use crate::client::{ClientStore, DeletionStrategy};
use crate::cloud::CloudStore;
use crate::error::{Error, Result};
use crate::metrics::swap_script;
use crate::symstring::{chunk, seeded_rng, Params, SymbolString};

pub const CSV_SCHEMA: &str = "schema=ygg-sweep-v1";
pub const CSV_COLUMNS: &str =
    "k,n_o_sym,n_b_sym,tau,n_f,n_b_count,r,ucr,ccr,gcr,ucr_formula,ccr_bound,median_swap,wall_ms";

/// Stand-in for a real log corpus: fixed-width synthetic log lines with
/// tunable cross-line redundancy, deterministic under seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpusSpec {
    pub lines: u64,
    pub template_pool: usize,
    /// Probability per line that the timestamp advances.
    pub ts_mutation: f64,
    /// Probability per line that the block id is redrawn.
    pub block_mutation: f64,
    /// Probability per line that the host changes.
    pub host_mutation: f64,
    pub seed: u64,
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lines == 0 || self.template_pool == 0 {
            return Err(Error::InvalidParams("corpus needs lines and templates".into()));
        }
        for (name, r) in [
            ("ts", self.ts_mutation),
            ("block", self.block_mutation),
            ("host", self.host_mutation),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParams(format!("{name} mutation rate {r} outside [0,1]")));
            }
        }
        Ok(())
    }
}

/// Every line is exactly 64 bytes including the newline, so a 1024-bit
/// chunk covers two whole lines at k=8.
pub const LINE_BYTES: usize = 64;

const COMPONENTS: [&str; 8] = [
    "dfs.DataNode", "dfs.FSNamesys", "dfs.Balancer", "mapred.Task",
    "mapred.Merger", "net.Topology", "ipc.Server", "fs.Trash",
];
const LEVELS: [&str; 4] = ["INFO", "WARN", "EROR", "DBUG"];
const FILLERS: [u8; 8] = [b'.', b'-', b'=', b'~', b'+', b'*', b':', b'#'];

struct Template {
    component: &'static str,
    level: &'static str,
    filler: u8,
    timestamp: u64,
    block_id: u64,
    host: u32,
}

/// Generates HDFS-flavoured log lines. Lines come in bursts of one
/// template; the first template dominates so that within-class pairs
/// outnumber cross-class ones. Byte-identical for identical specs.
pub fn synthesize_corpus(spec: &SyntheticCorpusSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let mut templates: Vec<Template> = (0..spec.template_pool)
        .map(|t| Template {
            component: COMPONENTS[t % COMPONENTS.len()],
            level: LEVELS[t % LEVELS.len()],
            filler: FILLERS[t % FILLERS.len()],
            timestamp: 1_200_000_000 + 86_400 * t as u64,
            block_id: rng.random_range(1_000_000_000..9_000_000_000u64),
            host: rng.random_range(0..16),
        })
        .collect();
    let mut out = Vec::with_capacity(spec.lines as usize * LINE_BYTES);
    let mut emitted = 0u64;
    while emitted < spec.lines {
        let t = if templates.len() == 1 || rng.random_bool(0.72) {
            0
        } else {
            rng.random_range(1..templates.len())
        };
        // even burst lengths keep two-line chunks template-pure
        let burst = 2 * rng.random_range(2..6u64);
        for _ in 0..burst.min(spec.lines - emitted) {
            if rng.random_bool(spec.ts_mutation) {
                templates[t].timestamp += rng.random_range(1..60u64);
            }
            if rng.random_bool(spec.block_mutation) {
                templates[t].block_id = rng.random_range(1_000_000_000..9_000_000_000u64);
            }
            if rng.random_bool(spec.host_mutation) {
                templates[t].host = rng.random_range(0..16);
            }
            let tpl = &templates[t];
            let line = format!(
                "{:013} {} {:<13} blk_{:010} host{:02}.rack{} ",
                tpl.timestamp,
                tpl.level,
                tpl.component,
                tpl.block_id,
                tpl.host,
                tpl.host % 4,
            );
            let mut bytes = line.into_bytes();
            bytes.truncate(LINE_BYTES - 1);
            while bytes.len() < LINE_BYTES - 1 {
                bytes.push(tpl.filler);
            }
            bytes.push(b'\n');
            debug_assert_eq!(bytes.len(), LINE_BYTES);
            out.extend_from_slice(&bytes);
            emitted += 1;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeUnits {
    /// CLI sizes are bit counts, converted to symbols as bits/k.
    Bits,
    /// CLI sizes are symbol counts used as-is.
    Symbols,
}

#[derive(Clone, Debug)]
pub enum CorpusSource {
    Directory(PathBuf),
    Synthetic(SyntheticCorpusSpec),
    /// Corpus already in memory; used by tests and the sweep driver.
    Bytes(Vec<u8>),
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub source: CorpusSource,
    /// Original-string size per chunk, interpreted per `units`.
    pub chunk_size: u32,
    /// Base-size grid, interpreted per `units`.
    pub base_sizes: Vec<u32>,
    pub ks: Vec<u8>,
    pub taus: Vec<u32>,
    pub s_h: u16,
    pub seed: u64,
    pub units: SizeUnits,
    pub strategy: DeletionStrategy,
    pub verify: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.base_sizes.is_empty() || self.taus.is_empty() {
            return Err(Error::InvalidParams("empty sweep grid".into()));
        }
        Ok(())
    }
}

/// One grid point of a sweep. Ratios are exact; the CSV renders them in
/// decimal.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub k: u8,
    pub n_o_sym: u32,
    pub n_b_sym: u32,
    pub tau: u32,
    pub n_f: u64,
    pub n_b_count: u64,
    pub r: BigRational,
    pub ucr: BigRational,
    pub ccr: BigRational,
    pub gcr: BigRational,
    pub ucr_formula: BigRational,
    pub ccr_bound: BigRational,
    pub median_swap: u64,
    pub wall_ms: u64,
}

pub fn load_corpus(source: &CorpusSource) -> Result<Vec<u8>> {
    match source {
        CorpusSource::Bytes(b) => Ok(b.clone()),
        CorpusSource::Synthetic(spec) => synthesize_corpus(spec),
        CorpusSource::Directory(dir) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.is_file())
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(Error::InvalidParams(format!("no files under {}", dir.display())));
            }
            let mut out = Vec::new();
            for p in paths {
                out.extend_from_slice(&std::fs::read(p)?);
            }
            Ok(out)
        }
    }
}

/// Per-(k, n_b) seed. Independent of tau so the client side, and with it
/// the UCR column, is identical across the tau grid.
fn derive_seed(seed: u64, k: u8, n_b_sym: u32) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [k as u64, n_b_sym as u64] {
        h ^= v;
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 27;
        h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

/// Median greedy swap distance over sampled pairs of distinct uploaded
/// bases. This is the paper's tau-selection heuristic, measured before
/// deduplication.
fn median_swap_distance(bases: &[SymbolString], sample: usize, rng: &mut impl Rng) -> Result<u64> {
    if bases.len() < 2 {
        return Ok(0);
    }
    let mut distances = Vec::with_capacity(sample);
    let mut attempts = 0usize;
    while distances.len() < sample && attempts < sample * 20 {
        attempts += 1;
        let i = rng.random_range(0..bases.len());
        let j = rng.random_range(0..bases.len());
        if i == j || bases[i] == bases[j] {
            continue;
        }
        distances.push(swap_script(&bases[i], &bases[j])?.len() as u64);
    }
    if distances.is_empty() {
        return Ok(0);
    }
    distances.sort_unstable();
    Ok(distances[distances.len() / 2])
}

/// Runs the full pipeline for one grid point: chunk, upload through the
/// client store, deduplicate into one cloud store, measure.
pub fn run_pipeline(
    config: &ExperimentConfig,
    corpus: &[u8],
    params: Params,
) -> Result<SweepRow> {
    let started = Instant::now();
    let cf = chunk(corpus, &params)?;
    let n_f = cf.chunks.len() as u64;
    if n_f == 0 {
        return Err(Error::InvalidParams("empty corpus".into()));
    }
    let mut rng = seeded_rng(derive_seed(config.seed, params.k, params.n_b));
    let mut client = ClientStore::new(params)?;
    let mut cloud = CloudStore::new(params)?;
    let mut uploads = Vec::with_capacity(cf.chunks.len());
    for f in &cf.chunks {
        let (id, base) = client.upload(config.strategy, f, &mut rng)?;
        uploads.push((id, base));
    }
    let median_swap = {
        let bases: Vec<SymbolString> = uploads.iter().map(|(_, b)| b.clone()).collect();
        median_swap_distance(&bases, 301, &mut rng)?
    };
    for (id, base) in &uploads {
        cloud.compress(*id, base)?;
    }
    if config.verify {
        for ((id, _), original) in uploads.iter().zip(&cf.chunks) {
            let restored = client.get(*id, &cloud.decompress(*id)?)?;
            if restored != *original {
                return Err(Error::VerificationFailed(*id));
            }
        }
    }
    let db_bits = n_f * params.original_bits();
    let report = measured_ratios(client.storage_bits(), cloud.storage_bits(), db_bits)?;
    let n_b_count = cloud.bases.len() as u64;
    let ccr_bound = BigRational::new(cloud.storage_bound_bits().into(), db_bits.into());
    Ok(SweepRow {
        k: params.k,
        n_o_sym: params.n_o,
        n_b_sym: params.n_b,
        tau: params.tau,
        n_f,
        n_b_count,
        r: BigRational::new(n_b_count.into(), n_f.into()),
        ucr: report.ucr,
        ccr: report.ccr,
        gcr: report.gcr,
        ucr_formula: ucr_formula(&params)?,
        ccr_bound,
        median_swap,
        wall_ms: started.elapsed().as_millis() as u64,
    })
}

/// Symbol counts for one (k, size) pair, or the reason the pair is
/// skipped.
fn to_symbols(units: SizeUnits, k: u8, size: u32) -> std::result::Result<u32, String> {
    match units {
        SizeUnits::Symbols => Ok(size),
        SizeUnits::Bits => {
            if size % k as u32 != 0 {
                Err(format!("{size} bits not divisible by k={k}"))
            } else {
                Ok(size / k as u32)
            }
        }
    }
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Grid points that could not run, with reasons.
    pub skipped: Vec<String>,
}

impl SweepOutcome {
    /// The GCR-minimizing tau per (k, n_b) group.
    pub fn best_taus(&self) -> BTreeMap<(u8, u32), u32> {
        let mut best: BTreeMap<(u8, u32), (u32, BigRational)> = BTreeMap::new();
        for row in &self.rows {
            let key = (row.k, row.n_b_sym);
            match best.get(&key) {
                Some((_, g)) if *g <= row.gcr => {}
                _ => {
                    best.insert(key, (row.tau, row.gcr.clone()));
                }
            }
        }
        best.into_iter().map(|(k, (tau, _))| (k, tau)).collect()
    }
}

/// Runs the whole grid. Grid points are independent and run in parallel;
/// rows come back in (k, n_b, tau) order.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let corpus = load_corpus(&config.source)?;
    let mut grid = Vec::new();
    let mut skipped = Vec::new();
    for &k in &config.ks {
        let n_o = match to_symbols(config.units, k, config.chunk_size) {
            Ok(v) => v,
            Err(why) => {
                skipped.push(format!("skip k={k}: {why}"));
                continue;
            }
        };
        for &bs in &config.base_sizes {
            let n_b = match to_symbols(config.units, k, bs) {
                Ok(v) => v,
                Err(why) => {
                    skipped.push(format!("skip k={k} n_b={bs}: {why}"));
                    continue;
                }
            };
            for &tau in &config.taus {
                match Params::new(k, n_o, n_b, tau, config.s_h) {
                    Ok(p) => grid.push(p),
                    Err(e) => skipped.push(format!("skip k={k} n_b={bs} tau={tau}: {e}")),
                }
            }
        }
    }
    let results: Vec<std::result::Result<SweepRow, String>> = grid
        .par_iter()
        .map(|&p| {
            run_pipeline(config, &corpus, p).map_err(|e| {
                format!("skip k={} n_b={} tau={}: {e}", p.k, p.n_b, p.tau)
            })
        })
        .collect();
    let mut rows = Vec::new();
    for res in results {
        match res {
            Ok(row) => rows.push(row),
            Err(why) => skipped.push(why),
        }
    }
    rows.sort_by_key(|r| (r.k, r.n_b_sym, r.tau));
    Ok(SweepOutcome { rows, skipped })
}

fn dec(r: &BigRational) -> String {
    format!("{:.6}", r.to_f64().unwrap_or(f64::NAN))
}

pub fn write_csv<W: Write>(rows: &[SweepRow], w: &mut W) -> Result<()> {
    writeln!(w, "{CSV_SCHEMA}")?;
    writeln!(w, "{CSV_COLUMNS}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.n_o_sym,
            r.n_b_sym,
            r.tau,
            r.n_f,
            r.n_b_count,
            dec(&r.r),
            dec(&r.ucr),
            dec(&r.ccr),
            dec(&r.gcr),
            dec(&r.ucr_formula),
            dec(&r.ccr_bound),
            r.median_swap,
            r.wall_ms,
        )?;
    }
    Ok(())
}
