//! The user side of the protocol: privacy deletions before upload,
//! reconstruction on retrieval, and the persistent local store.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::symstring::{Params, SymbolString};

/// How the client picks which symbols to delete.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeletionStrategy {
    /// A uniformly random distinct subset of positions.
    UniformRandom,
    /// Preferentially deletes inside runs of identical symbols so the
    /// emitted base avoids consecutive duplicates.
    RunBreaking,
}

/// The client-held inverse of the 1-deletions: `(original position,
/// deleted value)` pairs, sorted ascending by position.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalDeviation {
    pub deletions: Vec<(u32, u32)>,
}

impl LocalDeviation {
    /// Stored size: one original-string pointer plus one symbol per deletion.
    pub fn bit_size(&self, params: &Params) -> u64 {
        self.deletions.len() as u64 * (params.pos_bits() as u64 + params.k as u64)
    }

    fn validate(&self, params: &Params) -> Result<()> {
        let mut prev: Option<u32> = None;
        for &(pos, _) in &self.deletions {
            if pos >= params.n_o {
                return Err(Error::Corrupted(format!(
                    "deletion position {pos} out of range n_o={}",
                    params.n_o
                )));
            }
            if let Some(p) = prev {
                if pos <= p {
                    return Err(Error::Corrupted(format!(
                        "deletion positions not strictly increasing at {pos}"
                    )));
                }
            }
            prev = Some(pos);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientRecord {
    pub id: u64,
    pub deviation: LocalDeviation,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FileEntry {
    pub chunk_ids: Vec<u64>,
    pub original_bit_length: u64,
}

/// Persistent client state: one record per uploaded chunk plus a file
/// table mapping names to chunk id lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientStore {
    pub params: Params,
    pub records: BTreeMap<u64, ClientRecord>,
    pub files: BTreeMap<String, FileEntry>,
    next_id: u64,
}

/// Applies `n_o - n_b` 1-deletions to `f`, returning the base and the
/// local deviation that inverts them. Deletion positions always refer to
/// the original string.
pub fn apply_deletions(
    params: &Params,
    strategy: DeletionStrategy,
    f: &SymbolString,
    rng: &mut impl Rng,
) -> Result<(SymbolString, LocalDeviation)> {
    params.validate()?;
    if f.len() != params.n_o as usize {
        return Err(Error::LengthMismatch { left: f.len(), right: params.n_o as usize });
    }
    let x = params.deletions() as usize;
    let positions: Vec<usize> = match strategy {
        DeletionStrategy::UniformRandom => {
            let mut idx = sample(rng, params.n_o as usize, x).into_vec();
            idx.sort_unstable();
            idx
        }
        DeletionStrategy::RunBreaking => run_breaking_positions(f, x, rng),
    };
    let mut deletions = Vec::with_capacity(x);
    let mut base = Vec::with_capacity(params.n_b as usize);
    let mut del_iter = positions.iter().peekable();
    for (i, &s) in f.symbols().iter().enumerate() {
        if del_iter.peek() == Some(&&i) {
            deletions.push((i as u32, s));
            del_iter.next();
        } else {
            base.push(s);
        }
    }
    let base = SymbolString::new(params.k, base)?;
    Ok((base, LocalDeviation { deletions }))
}

/// Greedy run-breaking choice: each deletion removes a symbol from the
/// currently longest run of adjacent equal symbols; when no run is left
/// the position is drawn uniformly.
fn run_breaking_positions(f: &SymbolString, x: usize, rng: &mut impl Rng) -> Vec<usize> {
    // working copy of (original position, symbol)
    let mut work: Vec<(usize, u32)> = f.symbols().iter().copied().enumerate().collect();
    let mut chosen = Vec::with_capacity(x);
    for _ in 0..x {
        let mut best: Option<(usize, usize)> = None; // (run length, index in work)
        let mut i = 0;
        while i < work.len() {
            let mut j = i + 1;
            while j < work.len() && work[j].1 == work[i].1 {
                j += 1;
            }
            let run = j - i;
            if run >= 2 && best.map_or(true, |(len, _)| run > len) {
                best = Some((run, i));
            }
            i = j;
        }
        let idx = match best {
            Some((_, start)) => start + 1, // second element of the run
            None => rng.random_range(0..work.len()),
        };
        chosen.push(work[idx].0);
        work.remove(idx);
    }
    chosen.sort_unstable();
    chosen
}

/// Inserts the deleted values back at their original positions.
pub fn reconstruct(
    params: &Params,
    base: &SymbolString,
    deviation: &LocalDeviation,
) -> Result<SymbolString> {
    deviation.validate(params)?;
    if base.len() + deviation.deletions.len() != params.n_o as usize {
        return Err(Error::LengthMismatch {
            left: base.len() + deviation.deletions.len(),
            right: params.n_o as usize,
        });
    }
    let mut out = Vec::with_capacity(params.n_o as usize);
    let mut base_iter = base.symbols().iter();
    let mut del_iter = deviation.deletions.iter().peekable();
    for i in 0..params.n_o {
        if let Some(&&(pos, val)) = del_iter.peek() {
            if pos == i {
                out.push(val);
                del_iter.next();
                continue;
            }
        }
        match base_iter.next() {
            Some(&s) => out.push(s),
            None => {
                return Err(Error::Corrupted("base exhausted during reconstruction".into()))
            }
        }
    }
    SymbolString::new(params.k, out)
}

impl ClientStore {
    pub fn new(params: Params) -> Result<Self> {
        params.validate()?;
        Ok(ClientStore {
            params,
            records: BTreeMap::new(),
            files: BTreeMap::new(),
            next_id: 0,
        })
    }

    /// Uploads one original string: applies the deletions, stores the
    /// deviation under a fresh id, and returns what goes to the cloud.
    pub fn upload(
        &mut self,
        strategy: DeletionStrategy,
        f: &SymbolString,
        rng: &mut impl Rng,
    ) -> Result<(u64, SymbolString)> {
        let (base, deviation) = apply_deletions(&self.params, strategy, f, rng)?;
        let id = self.next_id;
        self.next_id += 1;
        self.records.insert(id, ClientRecord { id, deviation });
        Ok((id, base))
    }

    /// Completes a retrieval: inverts the deletions recorded for `id` on
    /// the string the cloud sent back.
    pub fn get(&self, id: u64, cloud_response: &SymbolString) -> Result<SymbolString> {
        let rec = self.records.get(&id).ok_or(Error::UnknownId(id))?;
        reconstruct(&self.params, cloud_response, &rec.deviation)
    }

    pub fn record_file(&mut self, name: &str, chunk_ids: Vec<u64>, original_bit_length: u64) {
        self.files.insert(
            name.to_string(),
            FileEntry { chunk_ids, original_bit_length },
        );
    }

    /// Total client-side storage in bits: per record, the deviation plus
    /// the file-identifier overhead `s_h`.
    pub fn storage_bits(&self) -> u64 {
        self.records
            .values()
            .map(|r| r.deviation.bit_size(&self.params) + self.params.s_h as u64)
            .sum()
    }

    pub fn save<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"YGGC")?;
        w.write_all(&[0x01])?;
        w.write_all(&[self.params.k])?;
        w.write_all(&self.params.n_o.to_le_bytes())?;
        w.write_all(&self.params.n_b.to_le_bytes())?;
        w.write_all(&self.params.s_h.to_le_bytes())?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        for rec in self.records.values() {
            w.write_all(&rec.id.to_le_bytes())?;
            w.write_all(&(rec.deviation.deletions.len() as u32).to_le_bytes())?;
            for &(pos, val) in &rec.deviation.deletions {
                w.write_all(&pos.to_le_bytes())?;
                w.write_all(&(val as u64).to_le_bytes())?;
            }
        }
        w.write_all(&(self.files.len() as u64).to_le_bytes())?;
        for (name, entry) in &self.files {
            let bytes = name.as_bytes();
            w.write_all(&(bytes.len() as u32).to_le_bytes())?;
            w.write_all(bytes)?;
            w.write_all(&(entry.chunk_ids.len() as u64).to_le_bytes())?;
            for id in &entry.chunk_ids {
                w.write_all(&id.to_le_bytes())?;
            }
            w.write_all(&entry.original_bit_length.to_le_bytes())?;
        }
        Ok(())
    }

    /// Loads a store saved with [`save`](Self::save). `tau` is runtime
    /// configuration and is not part of the on-disk format.
    pub fn load<R: Read>(r: &mut R, tau: u32) -> Result<Self> {
        let magic = read_array::<4>(r)?;
        if &magic != b"YGGC" {
            return Err(Error::Corrupted("bad client store magic".into()));
        }
        let version = read_array::<1>(r)?[0];
        if version != 0x01 {
            return Err(Error::Corrupted(format!("unsupported client store version {version}")));
        }
        let k = read_array::<1>(r)?[0];
        let n_o = u32::from_le_bytes(read_array(r)?);
        let n_b = u32::from_le_bytes(read_array(r)?);
        let s_h = u16::from_le_bytes(read_array(r)?);
        let params = Params::new(k, n_o, n_b, tau, s_h)
            .map_err(|e| Error::Corrupted(format!("bad stored params: {e}")))?;
        let n_records = u64::from_le_bytes(read_array(r)?);
        let mut records = BTreeMap::new();
        let mut next_id = 0u64;
        for _ in 0..n_records {
            let id = u64::from_le_bytes(read_array(r)?);
            let count = u32::from_le_bytes(read_array(r)?);
            if count > params.deletions() {
                return Err(Error::Corrupted(format!(
                    "record {id} has {count} deletions, params allow {}",
                    params.deletions()
                )));
            }
            let mut deletions = Vec::with_capacity(count as usize);
            for _ in 0..count {
                let pos = u32::from_le_bytes(read_array(r)?);
                let val = u64::from_le_bytes(read_array(r)?);
                if val > u32::MAX as u64 {
                    return Err(Error::Corrupted(format!("deleted value {val} too wide")));
                }
                deletions.push((pos, val as u32));
            }
            let deviation = LocalDeviation { deletions };
            deviation.validate(&params)?;
            if records.insert(id, ClientRecord { id, deviation }).is_some() {
                return Err(Error::Corrupted(format!("duplicate record id {id}")));
            }
            next_id = next_id.max(id + 1);
        }
        let n_files = u64::from_le_bytes(read_array(r)?);
        let mut files = BTreeMap::new();
        for _ in 0..n_files {
            let name_len = u32::from_le_bytes(read_array(r)?) as usize;
            let mut name_bytes = vec![0u8; name_len];
            r.read_exact(&mut name_bytes)
                .map_err(|_| Error::Corrupted("truncated file table".into()))?;
            let name = String::from_utf8(name_bytes)
                .map_err(|_| Error::Corrupted("file name not UTF-8".into()))?;
            let n_ids = u64::from_le_bytes(read_array(r)?);
            let mut chunk_ids = Vec::with_capacity(n_ids as usize);
            for _ in 0..n_ids {
                let id = u64::from_le_bytes(read_array(r)?);
                if !records.contains_key(&id) {
                    return Err(Error::Corrupted(format!(
                        "file table references unknown chunk id {id}"
                    )));
                }
                chunk_ids.push(id);
            }
            let original_bit_length = u64::from_le_bytes(read_array(r)?);
            files.insert(name, FileEntry { chunk_ids, original_bit_length });
        }
        Ok(ClientStore { params, records, files, next_id })
    }
}

pub(crate) fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Corrupted("truncated store file".into()))?;
    Ok(buf)
}
