//! Interchange file carrying uploaded bases from `upload` to `compress`.
//! Layout: magic "YGGB", version byte, k, n_o, n_b, s_h, entry count,
//! then per entry the chunk id and the packed base.

use std::io::{Read, Write};

use ygg_core::{Error, Params, Result, SymbolString};

pub struct BaseFile {
    pub k: u8,
    pub n_o: u32,
    pub n_b: u32,
    pub s_h: u16,
    pub entries: Vec<(u64, SymbolString)>,
}

impl BaseFile {
    pub fn params(&self, tau: u32) -> Result<Params> {
        Params::new(self.k, self.n_o, self.n_b, tau, self.s_h)
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"YGGB")?;
        w.write_all(&[0x01, self.k])?;
        w.write_all(&self.n_o.to_le_bytes())?;
        w.write_all(&self.n_b.to_le_bytes())?;
        w.write_all(&self.s_h.to_le_bytes())?;
        w.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        for (id, base) in &self.entries {
            w.write_all(&id.to_le_bytes())?;
            w.write_all(&base.pack())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        fn arr<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
            let mut buf = [0u8; N];
            r.read_exact(&mut buf)
                .map_err(|_| Error::Corrupted("truncated base file".into()))?;
            Ok(buf)
        }
        let magic = arr::<4>(r)?;
        if &magic != b"YGGB" {
            return Err(Error::Corrupted("bad base file magic".into()));
        }
        let [version, k] = arr::<2>(r)?;
        if version != 0x01 {
            return Err(Error::Corrupted(format!("unsupported base file version {version}")));
        }
        let n_o = u32::from_le_bytes(arr(r)?);
        let n_b = u32::from_le_bytes(arr(r)?);
        let s_h = u16::from_le_bytes(arr(r)?);
        // round-trips the parameter checks; tau is irrelevant here
        Params::new(k, n_o, n_b, 0, s_h)
            .map_err(|e| Error::Corrupted(format!("bad base file params: {e}")))?;
        let count = u64::from_le_bytes(arr(r)?);
        let packed_len = ((k as usize * n_b as usize) + 7) / 8;
        let mut entries = Vec::new();
        for _ in 0..count {
            let id = u64::from_le_bytes(arr(r)?);
            let mut packed = vec![0u8; packed_len];
            r.read_exact(&mut packed)
                .map_err(|_| Error::Corrupted("truncated base entry".into()))?;
            entries.push((id, SymbolString::unpack(&packed, k, n_b as usize)?));
        }
        Ok(BaseFile { k, n_o, n_b, s_h, entries })
    }
}
