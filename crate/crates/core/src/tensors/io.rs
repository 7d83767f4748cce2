//! `CGT1` tensor files.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `CGT1`                  |
//! | 4      | 4    | u32 version = 1               |
//! | 8      | 4    | u32 rank = 2                  |
//! | 12     | 16   | u64 rows, u64 cols            |
//! | 28     | 2·rows·cols | binary16 payload, row-major |

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensors::{Half, Matrix};

pub const TENSOR_MAGIC: [u8; 4] = *b"CGT1";
pub const TENSOR_VERSION: u32 = 1;
pub const TENSOR_HEADER_LEN: usize = 28;

pub fn encode_tensor(m: &Matrix<Half>) -> Vec<u8> {
    let mut out = Vec::with_capacity(TENSOR_HEADER_LEN + 2 * m.as_slice().len());
    out.extend_from_slice(&TENSOR_MAGIC);
    out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    out.extend_from_slice(&2u32.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for h in m.as_slice() {
        out.extend_from_slice(&h.to_bits().to_le_bytes());
    }
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Matrix<Half>> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            what: "tensor header",
            needed: TENSOR_HEADER_LEN as u64,
            available: bytes.len() as u64,
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != TENSOR_MAGIC {
        return Err(Error::BadMagic {
            expected: TENSOR_MAGIC,
            found,
        });
    }
    if bytes.len() < TENSOR_HEADER_LEN {
        return Err(Error::Truncated {
            what: "tensor header",
            needed: TENSOR_HEADER_LEN as u64,
            available: bytes.len() as u64,
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != TENSOR_VERSION {
        return Err(Error::VersionMismatch {
            expected: TENSOR_VERSION,
            found: version,
        });
    }
    let rank = u32_at(8);
    if rank != 2 {
        return Err(Error::Shape(format!("tensor rank must be 2, got {rank}")));
    }
    let (rows, cols) = (u64_at(12), u64_at(20));
    let payload = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(2))
        .filter(|&n| n <= usize::MAX as u64 && rows <= usize::MAX as u64 && cols <= usize::MAX as u64)
        .ok_or_else(|| Error::DimOverflow(format!("{rows}x{cols}")))?;
    let available = (bytes.len() - TENSOR_HEADER_LEN) as u64;
    if available < payload {
        return Err(Error::Truncated {
            what: "tensor payload",
            needed: payload,
            available,
        });
    }
    let data = bytes[TENSOR_HEADER_LEN..TENSOR_HEADER_LEN + payload as usize]
        .chunks_exact(2)
        .map(|c| Half::from_bits(u16::from_le_bytes([c[0], c[1]])))
        .collect();
    Matrix::from_vec(rows as usize, cols as usize, data)
}

pub fn save_tensor(m: &Matrix<Half>, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_tensor(m))?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Matrix<Half>> {
    decode_tensor(&fs::read(path)?)
}
