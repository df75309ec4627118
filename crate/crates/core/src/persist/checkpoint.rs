//! Binary policy checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 8 | magic `PHYSPLAN` |
//! | 8 | 4 | schema version (u32) |
//! | 12 | 4 | feature dim D (u32) |
//! | 16 | 4 | factor count F (u32) |
//! | 20 | 4F | factor cardinalities (u32 each, action-schema order) |
//! | 20+4F | 8 | policy version (u64) |
//! | 28+4F | 8 | weight count N (u64), must equal D·Σcardinalities |
//! | 36+4F | 8N | weights (f64), factor-major, then row, then feature |
//! | end-32 | 32 | SHA-256 of every preceding byte |

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::policy::PolicyParams;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PHYSPLAN";
pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

pub fn encode_checkpoint(params: &PolicyParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * params.weights.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_SCHEMA_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.feature_dim as u32).to_le_bytes());
    out.extend_from_slice(&(params.cardinalities.len() as u32).to_le_bytes());
    for &c in &params.cardinalities {
        out.extend_from_slice(&(c as u32).to_le_bytes());
    }
    out.extend_from_slice(&params.version.to_le_bytes());
    out.extend_from_slice(&(params.weights.len() as u64).to_le_bytes());
    for w in &params.weights {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Data(format!("checkpoint truncated at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn schema_err(found: u32, detail: impl Into<String>) -> Error {
    Error::Schema {
        expected: CHECKPOINT_SCHEMA_VERSION,
        found,
        detail: detail.into(),
    }
}

/// Decodes and validates against the current action schema.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<PolicyParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8).ok() != Some(CHECKPOINT_MAGIC.as_slice()) {
        return Err(schema_err(0, "not a policy checkpoint (bad magic)"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_SCHEMA_VERSION {
        return Err(schema_err(version, "unsupported checkpoint schema version"));
    }
    let feature_dim = r.u32()? as usize;
    let n_factors = r.u32()? as usize;
    if n_factors > 64 {
        return Err(schema_err(version, format!("implausible factor count {n_factors}")));
    }
    let cardinalities = (0..n_factors)
        .map(|_| r.u32().map(|c| c as usize))
        .collect::<Result<Vec<_>>>()?;
    let policy_version = r.u64()?;
    let n = r.u64()? as usize;
    let expected = feature_dim * cardinalities.iter().sum::<usize>();
    if n != expected {
        return Err(schema_err(version, format!("weight count {n} does not match header ({expected})")));
    }
    let body_len = r.pos + 8 * n;
    if bytes.len() != body_len + 32 {
        return Err(Error::Data(format!(
            "checkpoint is {} bytes, header implies {}",
            bytes.len(),
            body_len + 32
        )));
    }
    let weights = (0..n)
        .map(|_| r.u64().map(f64::from_bits))
        .collect::<Result<Vec<_>>>()?;
    if Sha256::digest(&bytes[..body_len]).as_slice() != &bytes[body_len..] {
        return Err(Error::Data("checkpoint checksum mismatch".into()));
    }
    let params = PolicyParams {
        version: policy_version,
        feature_dim,
        cardinalities,
        weights,
    };
    params
        .check()
        .map_err(|e| schema_err(version, format!("incompatible with the current action schema: {e}")))?;
    Ok(params)
}

/// Writes through a temporary file so a crash never leaves a torn checkpoint.
pub fn save_checkpoint(path: &Path, params: &PolicyParams) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, encode_checkpoint(params)).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<PolicyParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut p = PolicyParams::random(1.3, 5);
        p.version = 42;
        let bytes = encode_checkpoint(&p);
        assert_eq!(decode_checkpoint(&bytes).unwrap(), p);
    }

    #[test]
    fn header_corruption_is_a_schema_error() {
        let p = PolicyParams::zeros();
        let mut bytes = encode_checkpoint(&p);
        bytes[8] = 9;
        assert!(matches!(decode_checkpoint(&bytes), Err(Error::Schema { found: 9, .. })));
        let mut bytes = encode_checkpoint(&p);
        bytes[0] = b'X';
        assert!(matches!(decode_checkpoint(&bytes), Err(Error::Schema { .. })));
        let mut bytes = encode_checkpoint(&p);
        bytes[20] = 7; // first cardinality
        assert!(matches!(decode_checkpoint(&bytes), Err(Error::Schema { .. })));
    }

    #[test]
    fn body_corruption_is_caught() {
        let p = PolicyParams::zeros();
        let mut bytes = encode_checkpoint(&p);
        let k = bytes.len() - 40;
        bytes[k] ^= 1;
        assert!(matches!(decode_checkpoint(&bytes), Err(Error::Data(_))));
        bytes.truncate(30);
        assert!(decode_checkpoint(&bytes).is_err());
    }
}
