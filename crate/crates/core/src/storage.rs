//! `CGMM` layer container.
//!
//! One file holds one quantized layer. All integers are little-endian.
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `CGMM`                            |
//! | 4      | 4    | u32 version = 1                         |
//! | 8      | 8    | u64 M (rows)                            |
//! | 16     | 8    | u64 K (cols)                            |
//! | 24     | 2    | u16 v                                   |
//! | 26     | 2    | u16 m                                   |
//! | 28     | 1    | u8 b                                    |
//! | 29     | 8    | i64 g (`-1` = one scale per row)        |
//! | 37     | 8    | u64 seed                                |
//! | 45     | ...  | scales: `M * K/g_eff` binary16, row-major |
//! |        | ...  | `m` codebooks: `2^b * v` binary16 each, centroid-major |
//! |        | ...  | `m` code planes, each packed LSB-first to whole bytes |
//!
//! Code planes are packed independently, so each is padded to a byte
//! boundary; [`PayloadStats`] reports that padding separately.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quantizer::{
    pack_codes, packed_len, unpack_codes, Codebook, Group, QuantizedLayer, ScalePlane, Scheme,
};
use crate::tensors::{Half, Matrix};

pub const LAYER_MAGIC: [u8; 4] = *b"CGMM";
pub const LAYER_VERSION: u32 = 1;
pub const LAYER_HEADER_LEN: usize = 45;

/// Bit counts of the serialized payload (everything after the header).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PayloadStats {
    pub scale_bits: u128,
    pub codebook_bits: u128,
    pub code_bits: u128,
    pub padding_bits: u128,
}

impl PayloadStats {
    /// Payload bits excluding byte-alignment padding.
    pub fn data_bits(&self) -> u128 {
        self.scale_bits + self.codebook_bits + self.code_bits
    }

    pub fn payload_bytes(&self) -> u128 {
        (self.data_bits() + self.padding_bits) / 8
    }
}

pub fn payload_stats(q: &QuantizedLayer) -> PayloadStats {
    let s = q.scheme();
    let codes_per_plane = q.rows() * q.segments();
    let code_bits_per_plane = codes_per_plane as u128 * s.b as u128;
    let padded_per_plane = packed_len(codes_per_plane, s.b) as u128 * 8;
    PayloadStats {
        scale_bits: 16 * q.scales().matrix().as_slice().len() as u128,
        codebook_bits: 16 * (s.m * s.codebook_len() * s.v) as u128,
        code_bits: s.m as u128 * code_bits_per_plane,
        padding_bits: s.m as u128 * (padded_per_plane - code_bits_per_plane),
    }
}

pub fn encode_layer(q: &QuantizedLayer) -> Result<Vec<u8>> {
    let s = q.scheme();
    let stats = payload_stats(q);
    let mut out = Vec::with_capacity(LAYER_HEADER_LEN + stats.payload_bytes() as usize);
    out.extend_from_slice(&LAYER_MAGIC);
    out.extend_from_slice(&LAYER_VERSION.to_le_bytes());
    out.extend_from_slice(&(q.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(q.cols() as u64).to_le_bytes());
    out.extend_from_slice(&(s.v as u16).to_le_bytes());
    out.extend_from_slice(&(s.m as u16).to_le_bytes());
    out.push(s.b as u8);
    out.extend_from_slice(&s.g.as_i64().to_le_bytes());
    out.extend_from_slice(&q.seed().to_le_bytes());
    for h in q.scales().matrix().as_slice() {
        out.extend_from_slice(&h.to_bits().to_le_bytes());
    }
    for book in q.books() {
        for h in book.entries() {
            out.extend_from_slice(&h.to_bits().to_le_bytes());
        }
    }
    for plane in q.planes() {
        out.extend_from_slice(&pack_codes(plane, s.b)?);
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if available < n {
            return Err(Error::Truncated {
                what,
                needed: n as u64,
                available: available as u64,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn halves(&mut self, count: usize, what: &'static str) -> Result<Vec<Half>> {
        let bytes = self.take(count.checked_mul(2).ok_or_else(|| Error::DimOverflow(what.into()))?, what)?;
        Ok(bytes
            .chunks_exact(2)
            .map(|c| Half::from_bits(u16::from_le_bytes([c[0], c[1]])))
            .collect())
    }
}

fn to_usize(x: u64, what: &str) -> Result<usize> {
    usize::try_from(x).map_err(|_| Error::DimOverflow(format!("{what} = {x}")))
}

pub fn decode_layer(bytes: &[u8]) -> Result<QuantizedLayer> {
    let mut rd = Reader { bytes, pos: 0 };
    let found: [u8; 4] = rd.take(4, "layer header")?.try_into().unwrap();
    if found != LAYER_MAGIC {
        return Err(Error::BadMagic {
            expected: LAYER_MAGIC,
            found,
        });
    }
    let header = rd.take(LAYER_HEADER_LEN - 4, "layer header")?;
    let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let version = u32::from_le_bytes(header[0..4].try_into().unwrap());
    if version != LAYER_VERSION {
        return Err(Error::VersionMismatch {
            expected: LAYER_VERSION,
            found: version,
        });
    }
    let rows = to_usize(u64_at(4), "M")?;
    let cols = to_usize(u64_at(12), "K")?;
    let v = u16::from_le_bytes([header[20], header[21]]) as usize;
    let m = u16::from_le_bytes([header[22], header[23]]) as usize;
    let b = header[24] as u32;
    let g = i64::from_le_bytes(header[25..33].try_into().unwrap());
    let seed = u64_at(33);

    let invalid = |e: Error| match e {
        Error::Config(msg) => Error::InvalidLayer(msg),
        other => other,
    };
    let scheme = Scheme::new(v, m, b, Group::from_i64(g).map_err(invalid)?).map_err(invalid)?;
    scheme.check_dims(rows, cols).map_err(invalid)?;
    rows.checked_mul(cols)
        .ok_or_else(|| Error::DimOverflow(format!("{rows}x{cols}")))?;

    let gw = scheme.g.width(cols);
    let groups = cols / gw;
    let scale_data = rd.halves(rows * groups, "scales")?;
    let scales = ScalePlane::new(Matrix::from_vec(rows, groups, scale_data)?, gw)?;

    let mut books = Vec::with_capacity(m);
    for _ in 0..m {
        let entries = rd.halves(scheme.codebook_len() * v, "codebook")?;
        books.push(Codebook::new(v, b, entries)?);
    }
    let segs = cols / v;
    let mut planes = Vec::with_capacity(m);
    for _ in 0..m {
        let chunk = rd.take(packed_len(rows * segs, b), "code plane")?;
        planes.push(unpack_codes(chunk, rows, segs, b)?);
    }
    QuantizedLayer::from_parts(rows, cols, scheme, seed, scales, planes, books)
}

pub fn serialize(q: &QuantizedLayer, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_layer(q)?)?;
    Ok(())
}

pub fn deserialize(path: impl AsRef<Path>) -> Result<QuantizedLayer> {
    decode_layer(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accounting::bit_breakdown;
    use crate::quantizer::synthetic_layer;

    fn layer(b: u32) -> QuantizedLayer {
        synthetic_layer(6, 32, Scheme::new(4, 2, b, Group::Size(16)).unwrap(), 77).unwrap()
    }

    #[test]
    fn round_trip() {
        for b in [1, 3, 8, 11] {
            let q = layer(b);
            let bytes = encode_layer(&q).unwrap();
            let back = decode_layer(&bytes).unwrap();
            assert!(back.bits_eq(&q));
            assert_eq!(encode_layer(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode_layer(&layer(8)).unwrap();
        assert_eq!(&bytes[..4], b"CGMM");
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 6);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 32);
        assert_eq!(bytes[28], 8);
        assert_eq!(i64::from_le_bytes(bytes[29..37].try_into().unwrap()), 16);
        assert_eq!(u64::from_le_bytes(bytes[37..45].try_into().unwrap()), 77);
    }

    #[test]
    fn any_byte_is_a_valid_eight_bit_code() {
        let mut bytes = encode_layer(&layer(8)).unwrap();
        let last = bytes.len() - 1;
        for value in [0u8, 1, 128, 255] {
            bytes[last] = value;
            let q = decode_layer(&bytes).unwrap();
            assert_eq!(*q.planes()[1].codes().last().unwrap(), value as u16);
        }
    }

    #[test]
    fn zero_scale_is_rejected() {
        let mut bytes = encode_layer(&layer(8)).unwrap();
        bytes[LAYER_HEADER_LEN..LAYER_HEADER_LEN + 2].copy_from_slice(&0u16.to_le_bytes());
        assert!(matches!(decode_layer(&bytes), Err(Error::InvalidLayer(_))));
    }

    #[test]
    fn distinct_errors() {
        let bytes = encode_layer(&layer(3)).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_layer(&bad), Err(Error::BadMagic { .. })));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode_layer(&bad), Err(Error::VersionMismatch { found: 2, .. })));
        assert!(matches!(decode_layer(&bytes[..bytes.len() - 1]), Err(Error::Truncated { .. })));
        assert!(matches!(decode_layer(&bytes[..20]), Err(Error::Truncated { .. })));
        let mut bad = bytes.clone();
        bad[28] = 0;
        assert!(matches!(decode_layer(&bad), Err(Error::InvalidLayer(_))));
    }

    #[test]
    fn out_of_range_code_is_rejected() {
        // packed b-bit fields cannot hold a wider code, so this is checked on assembly
        let q = layer(3);
        let plane = crate::quantizer::CodePlane::new(6, 8, vec![9; 48]).unwrap();
        assert!(matches!(
            QuantizedLayer::from_parts(6, 32, q.scheme(), 0, q.scales().clone(), vec![plane.clone(), plane], q.books().to_vec()),
            Err(Error::CodeOutOfRange { .. })
        ));
    }

    #[test]
    fn payload_matches_bit_budget() {
        let q = layer(3);
        let stats = payload_stats(&q);
        let bits = bit_breakdown(&q.scheme(), q.rows(), q.cols()).unwrap();
        assert_eq!(stats.data_bits(), bits.total_bits);
        let bytes = encode_layer(&q).unwrap();
        assert_eq!((bytes.len() - LAYER_HEADER_LEN) as u128, stats.payload_bytes());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("layer.cgmm");
        let q = layer(5);
        serialize(&q, &path).unwrap();
        assert!(deserialize(&path).unwrap().bits_eq(&q));
    }
}
