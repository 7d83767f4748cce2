//! Fixed-width code planes and their LSB-first bitstream encoding.

use crate::error::{Error, Result};

/// `rows x cols` grid of codes, one per weight vector (`cols = K / v`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodePlane {
    rows: usize,
    cols: usize,
    codes: Vec<u16>,
}

impl CodePlane {
    pub fn new(rows: usize, cols: usize, codes: Vec<u16>) -> Result<Self> {
        if codes.len() != rows * cols {
            return Err(Error::Shape(format!(
                "code plane {rows}x{cols} needs {} codes, got {}",
                rows * cols,
                codes.len()
            )));
        }
        Ok(CodePlane { rows, cols, codes })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn codes(&self) -> &[u16] {
        &self.codes
    }

    pub fn row(&self, r: usize) -> &[u16] {
        &self.codes[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> u16 {
        self.codes[r * self.cols + c]
    }

    /// Fails if any code needs more than `bits` bits.
    pub fn check_bits(&self, bits: u32) -> Result<()> {
        let limit = 1u32 << bits;
        match self.codes.iter().find(|&&c| c as u32 >= limit) {
            Some(&c) => Err(Error::CodeOutOfRange { code: c as u32, bits }),
            None => Ok(()),
        }
    }
}

/// Number of bytes `count` codes of `bits` bits occupy once packed.
pub fn packed_len(count: usize, bits: u32) -> usize {
    (count * bits as usize).div_ceil(8)
}

/// Concatenate codes least-significant-bit first, zero-padding the final byte.
pub fn pack_codes(plane: &CodePlane, bits: u32) -> Result<Vec<u8>> {
    if !(1..=16).contains(&bits) {
        return Err(Error::Config(format!("code width must be in 1..=16, got {bits}")));
    }
    plane.check_bits(bits)?;
    let mut out = Vec::with_capacity(packed_len(plane.codes.len(), bits));
    let mut acc: u32 = 0;
    let mut filled = 0u32;
    for &code in &plane.codes {
        acc |= (code as u32) << filled;
        filled += bits;
        while filled >= 8 {
            out.push(acc as u8);
            acc >>= 8;
            filled -= 8;
        }
    }
    if filled > 0 {
        out.push(acc as u8);
    }
    Ok(out)
}

pub fn unpack_codes(bytes: &[u8], rows: usize, cols: usize, bits: u32) -> Result<CodePlane> {
    if !(1..=16).contains(&bits) {
        return Err(Error::Config(format!("code width must be in 1..=16, got {bits}")));
    }
    let count = rows * cols;
    let needed = packed_len(count, bits);
    if bytes.len() < needed {
        return Err(Error::Truncated {
            what: "code plane",
            needed: needed as u64,
            available: bytes.len() as u64,
        });
    }
    let mask = (1u32 << bits) - 1;
    let mut codes = Vec::with_capacity(count);
    let mut acc: u32 = 0;
    let mut filled = 0u32;
    let mut input = bytes.iter();
    for _ in 0..count {
        while filled < bits {
            acc |= (*input.next().unwrap() as u32) << filled;
            filled += 8;
        }
        codes.push((acc & mask) as u16);
        acc >>= bits;
        filled -= bits;
    }
    CodePlane::new(rows, cols, codes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eight_bit_codes_are_bytes() {
        let plane = CodePlane::new(1, 4, vec![0, 17, 200, 255]).unwrap();
        assert_eq!(pack_codes(&plane, 8).unwrap(), vec![0, 17, 200, 255]);
    }

    #[test]
    fn one_bit_layout() {
        let plane = CodePlane::new(1, 4, vec![1, 0, 1, 1]).unwrap();
        assert_eq!(pack_codes(&plane, 1).unwrap(), vec![0b0000_1101]);
    }

    #[test]
    fn three_bit_straddles_bytes() {
        let plane = CodePlane::new(1, 3, vec![0b101, 0b011, 0b110]).unwrap();
        // bits: 101 | 011 | 110 -> 0b10_011_101, 0b1
        assert_eq!(pack_codes(&plane, 3).unwrap(), vec![0b1001_1101, 0b0000_0001]);
    }

    #[test]
    fn rejects_wide_codes() {
        let plane = CodePlane::new(1, 2, vec![3, 4]).unwrap();
        assert!(matches!(
            pack_codes(&plane, 2),
            Err(Error::CodeOutOfRange { code: 4, bits: 2 })
        ));
    }

    #[test]
    fn short_stream() {
        assert!(matches!(unpack_codes(&[0xFF], 1, 3, 4), Err(Error::Truncated { .. })));
    }

    proptest! {
        #[test]
        fn round_trip(bits in 1u32..=16, rows in 1usize..6, cols in 1usize..40, seed in any::<u64>()) {
            let mask = ((1u32 << bits) - 1) as u64;
            let mut s = seed;
            let codes: Vec<u16> = (0..rows * cols)
                .map(|_| {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((s >> 33) & mask) as u16
                })
                .collect();
            let plane = CodePlane::new(rows, cols, codes).unwrap();
            let bytes = pack_codes(&plane, bits).unwrap();
            prop_assert_eq!(bytes.len(), packed_len(rows * cols, bits));
            prop_assert_eq!(unpack_codes(&bytes, rows, cols, bits).unwrap(), plane);
        }
    }
}
