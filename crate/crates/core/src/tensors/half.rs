//! IEEE 754 binary16 storage type.
//!
//! Values are only ever stored as binary16; arithmetic widens to `f32` (or
//! `f64` for reference computations) first.

use std::fmt;

/// The canonical quiet NaN every NaN input encodes to.
pub const CANONICAL_NAN: u16 = 0x7E00;

/// A binary16 value, kept as its raw bit pattern.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Half(u16);

impl Half {
    pub const ZERO: Half = Half(0x0000);
    pub const ONE: Half = Half(0x3C00);

    pub const fn from_bits(bits: u16) -> Self {
        Half(bits)
    }

    pub const fn to_bits(self) -> u16 {
        self.0
    }

    /// Round-to-nearest-even encode, straight from `f64` (no double rounding).
    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            return Half(CANONICAL_NAN);
        }
        Half(half::f16::from_f64(x).to_bits())
    }

    pub fn from_f32(x: f32) -> Self {
        if x.is_nan() {
            return Half(CANONICAL_NAN);
        }
        Half(half::f16::from_f32(x).to_bits())
    }

    #[inline]
    pub fn to_f32(self) -> f32 {
        half::f16::from_bits(self.0).to_f32()
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        half::f16::from_bits(self.0).to_f64()
    }

    pub fn is_finite(self) -> bool {
        self.0 & 0x7C00 != 0x7C00
    }

    pub fn is_nan(self) -> bool {
        self.0 & 0x7C00 == 0x7C00 && self.0 & 0x03FF != 0
    }
}

impl fmt::Debug for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Half({:#06x} = {})", self.0, self.to_f64())
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f32(), f)
    }
}

/// Encode a real as binary16 (round-to-nearest-even, overflow to ±inf).
pub fn f16_encode(x: f64) -> Half {
    Half::from_f64(x)
}

/// Exact real value of a binary16 bit pattern.
pub fn f16_decode(h: Half) -> f64 {
    h.to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent decoder built from the bit-field definition.
    fn decode_by_formula(bits: u16) -> f64 {
        let sign = if bits & 0x8000 != 0 { -1.0 } else { 1.0 };
        let exp = ((bits >> 10) & 0x1F) as i32;
        let frac = (bits & 0x3FF) as f64;
        match exp {
            0 => sign * frac * 2f64.powi(-24),
            31 if frac == 0.0 => sign * f64::INFINITY,
            31 => f64::NAN,
            e => sign * (1.0 + frac / 1024.0) * 2f64.powi(e - 15),
        }
    }

    /// Nearest finite binary16 to `x` by enumerating every finite pattern,
    /// ties resolved toward the even mantissa.
    fn nearest_by_enumeration(x: f64) -> u16 {
        let mut best: Option<(f64, u16)> = None;
        for bits in 0u16..=0xFFFF {
            if bits & 0x7C00 == 0x7C00 {
                continue;
            }
            let d = (decode_by_formula(bits) - x).abs();
            best = match best {
                None => Some((d, bits)),
                Some((bd, bb)) if d < bd || (d == bd && bits & 1 == 0 && bb & 1 == 1) => {
                    Some((d, bits))
                }
                keep => keep,
            };
        }
        best.unwrap().1
    }

    #[test]
    fn encode_constants() {
        assert_eq!(f16_encode(1.0).to_bits(), 0x3C00);
        assert_eq!(f16_encode(0.0).to_bits(), 0x0000);
        assert_eq!(f16_encode(-0.0).to_bits(), 0x8000);
    }

    #[test]
    fn encode_2049_rounds_to_even_neighbor() {
        let expected = nearest_by_enumeration(2049.0);
        assert_eq!(expected, 0x6800);
        assert_eq!(f16_encode(2048.0 + 1.0).to_bits(), expected);
        assert_eq!(f16_decode(f16_encode(2049.0)), 2048.0);
    }

    #[test]
    fn encode_matches_enumeration_on_samples() {
        for &x in &[0.1, -0.30078125, 3.14159, 65504.0, 1e-5, -7.25e-6, 1000.5, 0.333] {
            assert_eq!(f16_encode(x).to_bits(), nearest_by_enumeration(x), "x = {x}");
        }
    }

    #[test]
    fn decode_constants() {
        assert_eq!(f16_decode(Half::from_bits(0x3C00)), 1.0);
        assert_eq!(f16_decode(Half::from_bits(0xC000)), -2.0);
        assert_eq!(f16_decode(Half::from_bits(0x0001)), 2f64.powi(-24));
        assert_eq!(decode_by_formula(0x0001), 2f64.powi(-24));
    }

    #[test]
    fn overflow_saturates_to_infinity() {
        assert_eq!(f16_encode(1e6).to_bits(), 0x7C00);
        assert_eq!(f16_encode(-1e6).to_bits(), 0xFC00);
        assert_eq!(f16_encode(f64::INFINITY).to_bits(), 0x7C00);
    }

    #[test]
    fn nan_is_canonicalized() {
        assert_eq!(f16_encode(f64::NAN).to_bits(), CANONICAL_NAN);
        assert_eq!(Half::from_f32(f32::from_bits(0x7FC0_1234)).to_bits(), CANONICAL_NAN);
        assert!(Half::from_bits(CANONICAL_NAN).is_nan());
    }

    #[test]
    fn exhaustive_finite_round_trip() {
        let mut count = 0;
        for bits in 0u16..=0xFFFF {
            let h = Half::from_bits(bits);
            if !h.is_finite() {
                continue;
            }
            count += 1;
            let x = f16_decode(h);
            assert_eq!(x, decode_by_formula(bits));
            assert_eq!(f16_encode(x).to_bits(), bits);
            assert_eq!(Half::from_f32(h.to_f32()).to_bits(), bits);
        }
        assert_eq!(count, 63_488);
    }

    #[test]
    fn encode_is_monotone_on_finite_values() {
        let mut prev = f16_encode(-65504.0).to_f64();
        let mut x = -70000.0f64;
        while x < 70000.0 {
            let y = f16_encode(x).to_f64();
            assert!(y >= prev || (y.is_infinite() && y < 0.0), "x = {x}");
            prev = y;
            x += 0.37;
        }
    }
}
