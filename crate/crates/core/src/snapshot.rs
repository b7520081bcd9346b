//! Binary snapshot records.
//!
//! Layout: the 8-byte magic `KDVBSNAP`, a little-endian `u64` header length,
//! the JSON header, then `modes` little-endian `f64` collocation values.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, RealField, NORMALIZATION};

pub const MAGIC: &[u8; 8] = b"KDVBSNAP";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub box_length: f64,
    pub modes: usize,
    pub time: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub normalization: String,
}

impl SnapshotHeader {
    pub fn new(grid: &GridSpec, time: f64, epsilon: f64, alpha: f64) -> Self {
        Self {
            box_length: grid.box_length(),
            modes: grid.modes(),
            time,
            epsilon,
            alpha,
            normalization: NORMALIZATION.to_string(),
        }
    }
}

pub(crate) fn write_prefixed_json<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
    let json = serde_json::to_vec(value)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    Ok(())
}

pub(crate) fn read_prefixed_json<R: Read, T: for<'de> Deserialize<'de>>(r: &mut R) -> Result<T> {
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 24 {
        return Err(Error::Format(format!("header length {len} is implausible")));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf)?;
    Ok(serde_json::from_slice(&buf)?)
}

pub fn write_snapshot<W: Write>(
    w: &mut W,
    header: &SnapshotHeader,
    field: &RealField,
) -> Result<()> {
    if field.values().len() != header.modes {
        return Err(Error::Contract(
            "header modes differ from field length".into(),
        ));
    }
    w.write_all(MAGIC)?;
    write_prefixed_json(w, header)?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<(SnapshotHeader, RealField)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let header: SnapshotHeader = read_prefixed_json(r)?;
    let grid = GridSpec::new(header.box_length, header.modes)?;
    let mut values = Vec::with_capacity(header.modes);
    let mut word = [0u8; 8];
    for _ in 0..header.modes {
        r.read_exact(&mut word)?;
        values.push(f64::from_le_bytes(word));
    }
    let field = RealField::new(grid, values)?;
    Ok((header, field))
}
