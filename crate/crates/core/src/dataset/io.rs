//! Little-endian binary dataset files: `GCDS`, u32 rows, u32 cols, then
//! row-major f64 values.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"GCDS";

pub fn encode<T: Scalar>(m: &Matrix<T>) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::Config("too many rows for u32 header".into()))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::Config("too many columns for u32 header".into()))?;
    let mut out = Vec::with_capacity(12 + 8 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    Ok(out)
}

pub fn decode<T: Scalar>(bytes: &[u8]) -> Result<Matrix<T>> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(Error::Parse("missing GCDS header".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() != rows * cols * 8 {
        return Err(Error::Parse(format!(
            "header says {rows}x{cols} but body holds {} bytes",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

pub fn write_dataset<T: Scalar>(path: &Path, m: &Matrix<T>) -> Result<()> {
    fs::write(path, encode(m)?).map_err(|e| Error::io(path, e))
}

pub fn read_dataset<T: Scalar>(path: &Path) -> Result<Matrix<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
