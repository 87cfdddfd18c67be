//! SFGD array files: little-endian header (magic `SFGD`, u8 ndim, u8 dtype,
//! u16 pad, u32 per dimension, zero-padded to a multiple of 8 bytes) followed
//! by row-major float64 values.

use std::fs;
use std::path::Path;

use super::array::Array;
use crate::error::{Result, SfError};

pub const MAGIC: &[u8; 4] = b"SFGD";
/// dtype code for float64 payloads.
pub const DTYPE_F64: u8 = 8;

pub fn header_len(ndim: usize) -> usize {
    (8 + 4 * ndim).div_ceil(8) * 8
}

pub fn encode(a: &Array) -> Vec<u8> {
    let nd = a.shape().len();
    let mut out = Vec::with_capacity(header_len(nd) + 8 * a.len());
    out.extend_from_slice(MAGIC);
    out.push(nd as u8);
    out.push(DTYPE_F64);
    out.extend_from_slice(&[0, 0]);
    for &n in a.shape() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.resize(header_len(nd), 0);
    for v in a.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Array> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(SfError::Format("missing SFGD magic".into()));
    }
    let nd = bytes[4] as usize;
    if bytes[5] != DTYPE_F64 {
        return Err(SfError::Format(format!("unsupported dtype code {}", bytes[5])));
    }
    let hl = header_len(nd);
    if nd == 0 || bytes.len() < hl {
        return Err(SfError::Format("truncated SFGD header".into()));
    }
    let shape: Vec<usize> =
        (0..nd).map(|i| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize).collect();
    let n: usize = shape.iter().product();
    let payload = &bytes[hl..];
    if payload.len() != 8 * n {
        return Err(SfError::Format(format!("payload holds {} bytes, shape {shape:?} needs {}", payload.len(), 8 * n)));
    }
    let data = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Array::from_vec(&shape, data)
}

pub fn write_sfgd(path: &Path, a: &Array) -> Result<()> {
    fs::write(path, encode(a))?;
    Ok(())
}

pub fn read_sfgd(path: &Path) -> Result<Array> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let a = Array::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, -6.5]).unwrap();
        let b = encode(&a);
        assert_eq!(&b[..4], b"SFGD");
        assert_eq!(b[4], 2);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 3);
        assert_eq!(b.len(), 16 + 48);
        assert_eq!(decode(&b).unwrap(), a);
        assert!(decode(&b[..20]).is_err());
        assert!(decode(b"XXXX0000").is_err());
    }
}
