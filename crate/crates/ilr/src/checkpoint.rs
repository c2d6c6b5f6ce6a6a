//! Binary checkpoint format ("QSTC", little-endian, f32 weights).

use std::path::Path;

use crate::config::ModelConfig;
use crate::error::{IlrError, Result};
use crate::model::IlrModel;

pub const MAGIC: &[u8; 4] = b"QSTC";
pub const VERSION: u32 = 1;

pub fn to_bytes(model: &IlrModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for w in model.config.to_words() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out.extend_from_slice(&(model.params.len() as u64).to_le_bytes());
    for (name, t) in model.params.iter() {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(t.shape().len() as u8);
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data().iter() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| IlrError::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<IlrModel> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(IlrError::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(IlrError::Checkpoint(format!("unsupported version {version}")));
    }
    let words = (0..ModelConfig::N_WORDS).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let config = ModelConfig::from_words(&words)?;
    let model = IlrModel::new(config, 0)?;
    let count = r.u64()? as usize;
    if count != model.params.len() {
        return Err(IlrError::Checkpoint(format!("{count} parameters stored, model has {}", model.params.len())));
    }
    for (name, t) in model.params.iter() {
        let len = r.u16()? as usize;
        let stored = std::str::from_utf8(r.take(len)?).map_err(|_| IlrError::Checkpoint("parameter name is not UTF-8".into()))?;
        if stored != name {
            return Err(IlrError::Checkpoint(format!("expected parameter '{name}', found '{stored}'")));
        }
        let rank = r.u8()? as usize;
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if dims != t.shape() {
            return Err(IlrError::Checkpoint(format!("'{name}' has shape {dims:?}, expected {:?}", t.shape())));
        }
        let raw = r.take(4 * t.numel())?;
        let vals: Vec<f64> = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        t.set_data(&vals);
    }
    if r.pos != buf.len() {
        return Err(IlrError::Checkpoint(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(model)
}

pub fn save(model: &IlrModel, path: &Path) -> Result<()> {
    qst_core::io::atomic_write(path, &to_bytes(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<IlrModel> {
    let buf = std::fs::read(path).map_err(|e| IlrError::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
    from_bytes(&buf)
}
