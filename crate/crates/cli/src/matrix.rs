// SPDX-License-Identifier: Apache-2.0

//! Dense matrix files: magic `OENMAT01`, rows and cols as u64 little-endian,
//! then rows·cols f64 little-endian values in row-major order.

use std::path::Path;

use ndarray::Array2;

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"OENMAT01";
const HEADER: usize = 24;

pub fn encode(m: &Array2<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Array2<f64>, String> {
    if bytes.len() < HEADER || &bytes[..8] != MAGIC {
        return Err("not an OENMAT01 file".into());
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (word(8), word(16));
    let count = rows
        .checked_mul(cols)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or("matrix dimensions overflow")?;
    if bytes.len() != HEADER + 8 * count {
        return Err(format!(
            "{rows}x{cols} matrix needs {} bytes, file has {}",
            HEADER + 8 * count,
            bytes.len()
        ));
    }
    let values = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Array2::from_shape_vec((rows as usize, cols as usize), values).expect("length checked"))
}

pub fn read(path: &Path) -> Result<Array2<f64>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}
