//! GFN files: one line of JSON header, then raw little-endian `f64` payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GridFunction;
use crate::error::{Error, Result};

const MAGIC: &str = "GFN1";
const DTYPE: &str = "f64le";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    magic: String,
    dim: usize,
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    dtype: String,
}

pub fn encode(u: &GridFunction) -> Vec<u8> {
    let header = Header {
        magic: MAGIC.into(),
        dim: u.dim(),
        shape: u.shape().to_vec(),
        spacing: u.spacing().to_vec(),
        origin: vec![0.0; u.dim()],
        dtype: DTYPE.into(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(8 * u.len());
    for v in u.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<GridFunction> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let header: Header = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.magic != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", header.magic)));
    }
    if header.dtype != DTYPE {
        return Err(Error::Format(format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.dim != header.shape.len() || header.dim != header.spacing.len() || header.dim != header.origin.len() {
        return Err(Error::Format("dim disagrees with shape/spacing/origin lengths".into()));
    }
    if header.origin.iter().any(|&o| o != 0.0) {
        return Err(Error::Format("origin must be the domain midpoint (all zeros)".into()));
    }
    let count = header
        .shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::Format("shape product overflows".into()))?;
    let payload = &bytes[nl + 1..];
    if payload.len() != 8 * count {
        return Err(Error::Format(format!(
            "payload has {} bytes, header promises {} values ({} bytes)",
            payload.len(),
            count,
            8 * count
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("payload contains non-finite values".into()));
    }
    GridFunction::new(header.shape, header.spacing, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_gfn<P: AsRef<Path>>(u: &GridFunction, path: P) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(u))?;
    Ok(())
}

pub fn read_gfn<P: AsRef<Path>>(path: P) -> Result<GridFunction> {
    decode(&fs::read(path)?)
}
