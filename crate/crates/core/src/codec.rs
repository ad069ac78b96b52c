//! Coordinate codecs.
//!
//! Grid coordinates are integers in [0, 255]. The continuous refiner works in
//! a per-axis unit space [-1, 1]; the discrete decoder works on fixed 8-bit
//! big-endian expansions. Both directions are exact: `denormalize(normalize(v))
//! == v` and `bit2int(int2bit(v)) == v` for every grid value.

use crate::{CoreError, Result};

/// Expands an integer in [0, 255] into 8 bits, most significant first.
pub fn int2bit(v: i64) -> Result<[u8; 8]> {
    if !(0..=255).contains(&v) {
        return Err(CoreError::Range(v));
    }
    let v = v as u8;
    let mut bits = [0u8; 8];
    for (k, bit) in bits.iter_mut().enumerate() {
        *bit = (v >> (7 - k)) & 1;
    }
    Ok(bits)
}

/// Collapses 8 bits (most significant first) back into an integer.
pub fn bit2int(bits: &[u8]) -> Result<u8> {
    if bits.len() != 8 {
        return Err(CoreError::BitLength(bits.len()));
    }
    let mut v: u8 = 0;
    for &b in bits {
        if b > 1 {
            return Err(CoreError::BitValue(b));
        }
        v = (v << 1) | b;
    }
    Ok(v)
}

/// Maps a grid coordinate to the continuous space: `v / 127.5 - 1`, so 0 maps
/// to -1 and 255 maps to +1.
pub fn normalize(v: u8) -> f64 {
    f64::from(v) / 127.5 - 1.0
}

/// Inverse of [`normalize`]: clamps to [-1, 1], rescales, and rounds to the
/// nearest grid value.
pub fn denormalize(x: f64) -> u8 {
    let x = if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) };
    ((x + 1.0) * 127.5).round() as u8
}
