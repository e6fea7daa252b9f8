//! The CSP side: base set maintenance, generalized deduplication within a
//! threshold of swap/change-value operations, and the persistent cloud
//! store.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::Rng;

use crate::client::read_array;
use crate::error::{Error, Result};
use crate::metrics::{
    apply_script, change_op_bits, hamming_bounded, swap_op_bits, swap_script, EditOp, EditScript,
};
use crate::symstring::{ceil_log2, Params, SymbolString};

/// What `setup` hands out: enough for a client to produce bases the cloud
/// can deduplicate against the current set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Policy {
    pub k: u8,
    pub n_o: u32,
    pub n_b: u32,
    pub strategy_hint: crate::client::DeletionStrategy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseEntry {
    pub base: SymbolString,
    pub refcount: u64,
}

/// One deduplicated chunk: which base it points at and the edit script
/// that transforms the uploaded base into the stored one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DedupRecord {
    pub id: u64,
    pub base_id: u64,
    pub deviation: EditScript,
}

/// Cloud state: the deduplicated base set plus one record per uploaded
/// string. Base ids are auto-incremented.
#[derive(Clone, Debug)]
pub struct CloudStore {
    pub params: Params,
    pub bases: BTreeMap<u64, BaseEntry>,
    pub records: BTreeMap<u64, DedupRecord>,
    next_base_id: u64,
    index: HashMap<u128, Vec<u64>>,
}

impl PartialEq for CloudStore {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.bases == other.bases && self.records == other.records
    }
}

/// 128-bit FNV-1a over the packed base bytes. Exact-match lookups resolve
/// collisions by full comparison, so correctness never depends on it.
fn fingerprint(packed: &[u8]) -> u128 {
    const OFFSET: u128 = 0x6c62272e07bb014262b821756295c58d;
    const PRIME: u128 = 0x0000000001000000000000000000013B;
    let mut h = OFFSET;
    for &b in packed {
        h ^= b as u128;
        h = h.wrapping_mul(PRIME);
    }
    h
}

impl CloudStore {
    pub fn new(params: Params) -> Result<Self> {
        params.validate()?;
        Ok(CloudStore {
            params,
            bases: BTreeMap::new(),
            records: BTreeMap::new(),
            next_base_id: 0,
            index: HashMap::new(),
        })
    }

    /// Emits the current policy. Deterministic given the store.
    pub fn setup(&self) -> Result<Policy> {
        for entry in self.bases.values() {
            if entry.base.len() != self.params.n_b as usize {
                return Err(Error::Corrupted(format!(
                    "base of length {} in a store with n_b={}",
                    entry.base.len(),
                    self.params.n_b
                )));
            }
        }
        Ok(Policy {
            k: self.params.k,
            n_o: self.params.n_o,
            n_b: self.params.n_b,
            strategy_hint: crate::client::DeletionStrategy::UniformRandom,
        })
    }

    fn find_exact(&self, f_prime: &SymbolString, fp: u128) -> Option<u64> {
        self.index.get(&fp).and_then(|ids| {
            ids.iter()
                .copied()
                .find(|id| self.bases[id].base == *f_prime)
        })
    }

    /// Generalized deduplication of one uploaded base, in the protocol's
    /// branch order: exact match, then nearest base within `tau`
    /// operations (ties to the lowest base id), else a fresh base.
    pub fn compress(&mut self, id: u64, f_prime: &SymbolString) -> Result<&DedupRecord> {
        if self.records.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        if f_prime.len() != self.params.n_b as usize {
            return Err(Error::LengthMismatch {
                left: f_prime.len(),
                right: self.params.n_b as usize,
            });
        }
        if f_prime.k() != self.params.k {
            return Err(Error::WidthMismatch { left: f_prime.k(), right: self.params.k });
        }
        let fp = fingerprint(&f_prime.pack());

        // step 1: exact match
        if let Some(base_id) = self.find_exact(f_prime, fp) {
            self.bases.get_mut(&base_id).unwrap().refcount += 1;
            let rec = DedupRecord { id, base_id, deviation: EditScript::empty() };
            return Ok(self.records.entry(id).or_insert(rec));
        }

        // step 2: nearest base within tau, ties to the lowest base id. A
        // greedy script of m ops fixes at most 2m mismatches, so a base
        // at Hamming distance h needs at least ceil(h/2) ops; candidates
        // are visited in order of that bound and dropped once it rules
        // them out against the best script so far.
        let tau = self.params.tau as u64;
        let mut best: Option<(u64, EditScript)> = None;
        if tau > 0 {
            let mut cands: Vec<(u64, u64)> = self
                .bases
                .iter()
                .filter_map(|(&base_id, entry)| {
                    hamming_bounded(f_prime.symbols(), entry.base.symbols(), 2 * tau)
                        .filter(|&h| h > 0) // exact matches go through the index
                        .map(|h| (h, base_id))
                })
                .collect();
            cands.sort_unstable();
            let mut best_ops = u64::MAX;
            let mut best_id = u64::MAX;
            for (h, base_id) in cands {
                let lower = h.div_ceil(2);
                if lower > best_ops {
                    break;
                }
                if lower == best_ops && base_id > best_id {
                    continue;
                }
                let script = swap_script(f_prime, &self.bases[&base_id].base)?;
                let ops = script.len() as u64;
                if ops <= tau && (ops < best_ops || (ops == best_ops && base_id < best_id)) {
                    best_ops = ops;
                    best_id = base_id;
                    best = Some((base_id, script));
                }
            }
        }
        if let Some((base_id, deviation)) = best {
            self.bases.get_mut(&base_id).unwrap().refcount += 1;
            let rec = DedupRecord { id, base_id, deviation };
            return Ok(self.records.entry(id).or_insert(rec));
        }

        // step 3: new base
        let base_id = self.next_base_id;
        self.next_base_id += 1;
        self.bases.insert(base_id, BaseEntry { base: f_prime.clone(), refcount: 1 });
        self.index.entry(fp).or_default().push(base_id);
        let rec = DedupRecord { id, base_id, deviation: EditScript::empty() };
        Ok(self.records.entry(id).or_insert(rec))
    }

    /// Reconstructs the uploaded base for `id` by inverting the stored
    /// deviation. Unknown ids yield [`Error::UnknownId`], the protocol's
    /// ignored-query signal, never a corruption error.
    pub fn decompress(&self, id: u64) -> Result<SymbolString> {
        let rec = self.records.get(&id).ok_or(Error::UnknownId(id))?;
        let entry = self
            .bases
            .get(&rec.base_id)
            .ok_or_else(|| Error::Corrupted(format!("record {id} points at missing base")))?;
        apply_script(&entry.base, &rec.deviation.invert())
    }

    /// Bits used to address a base when there are `n_bases` of them.
    pub fn pointer_bits(n_bases: u64) -> u64 {
        ceil_log2(n_bases.max(2)) as u64
    }

    /// Measured cloud storage: all bases at `k*n_b` bits each, plus per
    /// record the id overhead, a base pointer and the deviation.
    pub fn storage_bits(&self) -> u64 {
        let base_bits = self.bases.len() as u64 * self.params.base_bits();
        if self.bases.is_empty() && self.records.is_empty() {
            return 0;
        }
        let ptr = Self::pointer_bits(self.bases.len() as u64);
        let record_bits: u64 = self
            .records
            .values()
            .map(|r| {
                self.params.s_h as u64
                    + ptr
                    + r.deviation.bit_cost(self.params.k, self.params.n_o)
            })
            .sum();
        base_bits + record_bits
    }

    /// Closed-form upper bound on [`storage_bits`](Self::storage_bits),
    /// with the per-op term generalized to cover change-values wider than
    /// a swap.
    pub fn storage_bound_bits(&self) -> u64 {
        let n_b_count = self.bases.len() as u64;
        let n_f = self.records.len() as u64;
        let worst_op =
            swap_op_bits(self.params.n_o).max(change_op_bits(self.params.k, self.params.n_o));
        n_b_count * self.params.base_bits()
            + n_f * self.params.s_h as u64
            + n_f.saturating_sub(n_b_count) * self.params.tau as u64 * worst_op
            + n_f * Self::pointer_bits(n_b_count)
    }

    /// Median greedy swap distance over sampled base pairs; the paper's
    /// heuristic for a good `tau`.
    pub fn tau_heuristic(&self, sample: usize, rng: &mut impl Rng) -> Result<u64> {
        let ids: Vec<u64> = self.bases.keys().copied().collect();
        if ids.len() < 2 {
            return Err(Error::InvalidParams(
                "tau heuristic needs at least two bases".into(),
            ));
        }
        let total_pairs = ids.len() * (ids.len() - 1) / 2;
        let mut distances = Vec::new();
        if total_pairs <= sample {
            for i in 0..ids.len() {
                for j in (i + 1)..ids.len() {
                    let a = &self.bases[&ids[i]].base;
                    let b = &self.bases[&ids[j]].base;
                    distances.push(swap_script(a, b)?.len() as u64);
                }
            }
        } else {
            while distances.len() < sample {
                let i = rng.random_range(0..ids.len());
                let j = rng.random_range(0..ids.len());
                if i == j {
                    continue;
                }
                let a = &self.bases[&ids[i]].base;
                let b = &self.bases[&ids[j]].base;
                distances.push(swap_script(a, b)?.len() as u64);
            }
        }
        distances.sort_unstable();
        Ok(distances[distances.len() / 2])
    }

    pub fn save<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"YGGS")?;
        w.write_all(&[0x01])?;
        w.write_all(&[self.params.k])?;
        w.write_all(&self.params.n_o.to_le_bytes())?;
        w.write_all(&self.params.n_b.to_le_bytes())?;
        w.write_all(&self.params.s_h.to_le_bytes())?;
        w.write_all(&(self.bases.len() as u64).to_le_bytes())?;
        for (&base_id, entry) in &self.bases {
            w.write_all(&base_id.to_le_bytes())?;
            w.write_all(&entry.refcount.to_le_bytes())?;
            w.write_all(&entry.base.pack())?;
        }
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        for rec in self.records.values() {
            w.write_all(&rec.id.to_le_bytes())?;
            w.write_all(&rec.base_id.to_le_bytes())?;
            w.write_all(&(rec.deviation.ops.len() as u32).to_le_bytes())?;
            for op in &rec.deviation.ops {
                match *op {
                    EditOp::Swap { i, j } => {
                        w.write_all(&[0u8])?;
                        w.write_all(&i.to_le_bytes())?;
                        w.write_all(&j.to_le_bytes())?;
                    }
                    EditOp::ChangeValue { i, old, new } => {
                        w.write_all(&[1u8])?;
                        w.write_all(&i.to_le_bytes())?;
                        w.write_all(&(old as u64).to_le_bytes())?;
                        w.write_all(&(new as u64).to_le_bytes())?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Loads a store saved with [`save`](Self::save). `tau` is runtime
    /// configuration, not part of the on-disk format.
    pub fn load<R: Read>(r: &mut R, tau: u32) -> Result<Self> {
        let magic = read_array::<4>(r)?;
        if &magic != b"YGGS" {
            return Err(Error::Corrupted("bad cloud store magic".into()));
        }
        let version = read_array::<1>(r)?[0];
        if version != 0x01 {
            return Err(Error::Corrupted(format!("unsupported cloud store version {version}")));
        }
        let k = read_array::<1>(r)?[0];
        let n_o = u32::from_le_bytes(read_array(r)?);
        let n_b = u32::from_le_bytes(read_array(r)?);
        let s_h = u16::from_le_bytes(read_array(r)?);
        let params = Params::new(k, n_o, n_b, tau, s_h)
            .map_err(|e| Error::Corrupted(format!("bad stored params: {e}")))?;
        let n_bases = u64::from_le_bytes(read_array(r)?);
        let packed_len = (params.base_bits() as usize).div_ceil(8);
        let mut bases = BTreeMap::new();
        let mut index: HashMap<u128, Vec<u64>> = HashMap::new();
        let mut next_base_id = 0u64;
        for _ in 0..n_bases {
            let base_id = u64::from_le_bytes(read_array(r)?);
            let refcount = u64::from_le_bytes(read_array(r)?);
            let mut packed = vec![0u8; packed_len];
            r.read_exact(&mut packed)
                .map_err(|_| Error::Corrupted("truncated base".into()))?;
            let base = SymbolString::unpack(&packed, params.k, params.n_b as usize)?;
            index.entry(fingerprint(&base.pack())).or_default().push(base_id);
            if bases.insert(base_id, BaseEntry { base, refcount }).is_some() {
                return Err(Error::Corrupted(format!("duplicate base id {base_id}")));
            }
            next_base_id = next_base_id.max(base_id + 1);
        }
        let n_records = u64::from_le_bytes(read_array(r)?);
        let mut records = BTreeMap::new();
        for _ in 0..n_records {
            let id = u64::from_le_bytes(read_array(r)?);
            let base_id = u64::from_le_bytes(read_array(r)?);
            if !bases.contains_key(&base_id) {
                return Err(Error::Corrupted(format!(
                    "record {id} references unknown base {base_id}"
                )));
            }
            let n_ops = u32::from_le_bytes(read_array(r)?);
            if n_ops > params.tau {
                return Err(Error::Corrupted(format!(
                    "record {id} has {n_ops} ops, threshold is {}",
                    params.tau
                )));
            }
            let mut ops = Vec::with_capacity(n_ops as usize);
            for _ in 0..n_ops {
                let tag = read_array::<1>(r)?[0];
                match tag {
                    0 => {
                        let i = u32::from_le_bytes(read_array(r)?);
                        let j = u32::from_le_bytes(read_array(r)?);
                        ops.push(EditOp::Swap { i, j });
                    }
                    1 => {
                        let i = u32::from_le_bytes(read_array(r)?);
                        let old = u64::from_le_bytes(read_array(r)?);
                        let new = u64::from_le_bytes(read_array(r)?);
                        if old > u32::MAX as u64 || new > u32::MAX as u64 {
                            return Err(Error::Corrupted("edit op value too wide".into()));
                        }
                        ops.push(EditOp::ChangeValue {
                            i,
                            old: old as u32,
                            new: new as u32,
                        });
                    }
                    t => return Err(Error::Corrupted(format!("unknown edit op tag {t}"))),
                }
            }
            if records
                .insert(id, DedupRecord { id, base_id, deviation: EditScript { ops } })
                .is_some()
            {
                return Err(Error::Corrupted(format!("duplicate record id {id}")));
            }
        }
        // refcounts must agree with the records pointing at each base
        let mut counted: BTreeMap<u64, u64> = BTreeMap::new();
        for rec in records.values() {
            *counted.entry(rec.base_id).or_default() += 1;
        }
        for (&base_id, entry) in &bases {
            if counted.get(&base_id).copied().unwrap_or(0) != entry.refcount {
                return Err(Error::Corrupted(format!(
                    "refcount mismatch for base {base_id}"
                )));
            }
        }
        Ok(CloudStore { params, bases, records, next_base_id, index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symstring::seeded_rng;
    use rand::Rng;

    fn params(k: u8, n_o: u32, n_b: u32, tau: u32) -> Params {
        Params::new(k, n_o, n_b, tau, 64).unwrap()
    }

    fn ss(k: u8, v: &[u32]) -> SymbolString {
        SymbolString::new(k, v.to_vec()).unwrap()
    }

    #[test]
    fn exact_match_reuses_base() {
        let mut store = CloudStore::new(params(4, 6, 4, 2)).unwrap();
        let b = ss(4, &[1, 2, 3, 4]);
        let r1 = store.compress(0, &b).unwrap().clone();
        let r2 = store.compress(1, &b).unwrap().clone();
        assert_eq!(r1.base_id, r2.base_id);
        assert!(r2.deviation.is_empty());
        assert_eq!(store.bases[&r1.base_id].refcount, 2);
        assert_eq!(store.bases.len(), 1);
    }

    #[test]
    fn tau_zero_forces_new_base() {
        let mut store = CloudStore::new(params(4, 6, 4, 0)).unwrap();
        store.compress(0, &ss(4, &[1, 2, 3, 4])).unwrap();
        let r = store.compress(1, &ss(4, &[1, 2, 3, 5])).unwrap().clone();
        assert_eq!(store.bases.len(), 2);
        assert!(r.deviation.is_empty());
    }

    #[test]
    fn near_match_records_swap() {
        let mut store = CloudStore::new(params(4, 6, 4, 2)).unwrap();
        store.compress(0, &ss(4, &[1, 2, 3, 4])).unwrap();
        let f = ss(4, &[1, 3, 2, 4]);
        let r = store.compress(1, &f).unwrap().clone();
        assert_eq!(r.base_id, 0);
        assert_eq!(r.deviation.ops, vec![EditOp::Swap { i: 1, j: 2 }]);
        assert_eq!(store.bases.len(), 1);
        assert_eq!(store.decompress(1).unwrap(), f);
    }

    #[test]
    fn duplicate_and_unknown_ids() {
        let mut store = CloudStore::new(params(4, 6, 4, 0)).unwrap();
        store.compress(0, &ss(4, &[1, 2, 3, 4])).unwrap();
        assert!(matches!(
            store.compress(0, &ss(4, &[1, 2, 3, 4])),
            Err(Error::DuplicateId(0))
        ));
        assert!(matches!(store.decompress(9), Err(Error::UnknownId(9))));
    }

    #[test]
    fn compress_decompress_roundtrip_random() {
        let mut rng = seeded_rng(21);
        let p = params(4, 10, 8, 3);
        let mut store = CloudStore::new(p).unwrap();
        let mut uploads = Vec::new();
        for id in 0..500u64 {
            let f = ss(4, &(0..8).map(|_| rng.random_range(0..16)).collect::<Vec<_>>());
            store.compress(id, &f).unwrap();
            uploads.push((id, f));
        }
        for (id, f) in &uploads {
            assert_eq!(store.decompress(*id).unwrap(), *f);
        }
        // threshold law + refcount conservation
        assert!(store.records.values().all(|r| r.deviation.len() <= 3));
        let refsum: u64 = store.bases.values().map(|b| b.refcount).sum();
        assert_eq!(refsum, store.records.len() as u64);
        assert!(store.storage_bits() <= store.storage_bound_bits());
    }

    #[test]
    fn storage_accounting_example() {
        // 1 base, 1 record, empty deviation, k=8, n_b=950, s_h=64
        let p = Params::new(8, 1024, 950, 0, 64).unwrap();
        let mut store = CloudStore::new(p).unwrap();
        let base = ss(8, &vec![7u32; 950]);
        store.compress(0, &base).unwrap();
        assert_eq!(store.storage_bits(), 7600 + 64 + 1);
        // a one-swap record adds s_h + pointer + 2*ceil(log2 n_o)
        let mut two = CloudStore::new(Params::new(8, 1024, 950, 1, 64).unwrap()).unwrap();
        let mut b0 = vec![7u32; 950];
        b0[0] = 1;
        two.compress(0, &ss(8, &b0)).unwrap();
        let mut b1 = b0.clone();
        b1.swap(0, 5);
        two.compress(1, &ss(8, &b1)).unwrap();
        assert_eq!(two.bases.len(), 1);
        assert_eq!(two.storage_bits(), 7600 + (64 + 1) + (64 + 1 + 20));
    }

    #[test]
    fn empty_store_is_zero_bits() {
        let store = CloudStore::new(params(8, 8, 8, 0)).unwrap();
        assert_eq!(store.storage_bits(), 0);
    }

    #[test]
    fn tau_heuristic_cases() {
        let mut rng = seeded_rng(22);
        // tau=0 so every distinct upload becomes its own base
        let p = params(2, 4, 2, 0);
        let mut store = CloudStore::new(p).unwrap();
        assert!(store.compress(0, &ss(2, &[1, 2])).is_ok());
        assert!(store.tau_heuristic(10, &mut rng).is_err());
        store.compress(1, &ss(2, &[2, 1])).unwrap();
        store.compress(2, &ss(2, &[1, 1])).unwrap();
        assert_eq!(store.bases.len(), 3);
        assert_eq!(store.tau_heuristic(10, &mut rng).unwrap(), 1);
    }

    #[test]
    fn store_roundtrip_and_corruption() {
        let mut rng = seeded_rng(23);
        let p = params(2, 8, 6, 2);
        let mut store = CloudStore::new(p).unwrap();
        for id in 0..50u64 {
            let f = ss(2, &(0..6).map(|_| rng.random_range(0..4)).collect::<Vec<_>>());
            store.compress(id, &f).unwrap();
        }
        let mut buf = Vec::new();
        store.save(&mut buf).unwrap();
        let loaded = CloudStore::load(&mut buf.as_slice(), p.tau).unwrap();
        assert_eq!(loaded, store);
        let mut buf2 = Vec::new();
        loaded.save(&mut buf2).unwrap();
        assert_eq!(buf, buf2);

        let mut bad_magic = buf.clone();
        bad_magic[2] = 0;
        assert!(matches!(
            CloudStore::load(&mut bad_magic.as_slice(), p.tau),
            Err(Error::Corrupted(_))
        ));
        let truncated = &buf[..buf.len().saturating_sub(2)];
        assert!(matches!(
            CloudStore::load(&mut &truncated[..], p.tau),
            Err(Error::Corrupted(_))
        ));
    }

    #[test]
    fn exact_match_wins_over_near_match() {
        // the two stored bases are farther than tau apart
        let mut store = CloudStore::new(params(4, 6, 4, 1)).unwrap();
        store.compress(0, &ss(4, &[1, 2, 3, 5])).unwrap();
        store.compress(1, &ss(4, &[5, 6, 7, 0])).unwrap();
        let r = store.compress(2, &ss(4, &[5, 6, 7, 0])).unwrap().clone();
        assert_eq!(r.base_id, 1);
        assert!(r.deviation.is_empty());
    }
}
