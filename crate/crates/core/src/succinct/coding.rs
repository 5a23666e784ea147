//! Signed Elias-gamma codes: a sign bit (0 for positive) followed by
//! `floor(log2 x)` zeros and the binary digits of `x`, most significant first.

use super::bitvector::{BitVector, BitWriter};
use crate::error::{GirgError, Result};

/// Length of the gamma code of `x >= 1`.
pub fn gamma_len(x: u64) -> u32 {
    2 * (63 - x.leading_zeros()) + 1
}

pub fn write_signed(w: &mut BitWriter, diff: i64) {
    debug_assert!(diff != 0);
    w.push(diff < 0);
    let x = diff.unsigned_abs();
    let z = 63 - x.leading_zeros();
    w.push_bits(0, z);
    // Most significant digit first: reverse the low z + 1 bits.
    w.push_bits(x.reverse_bits() >> (63 - z), z + 1);
}

/// Decodes the code starting at 1-based position `b`; returns the value and
/// the number of bits consumed.
pub fn read_signed(bv: &BitVector, b: usize) -> Result<(i64, usize)> {
    if b == 0 || b + 1 > bv.len() {
        return Err(GirgError::corrupt(format!("code at position {b} runs past the payload")));
    }
    let negative = bv.get(b);
    let win = bv.window(b + 1);
    if win == 0 {
        return Err(GirgError::corrupt(format!("gamma code at position {} too long", b + 1)));
    }
    let z = win.trailing_zeros();
    if z > 62 {
        return Err(GirgError::corrupt("gamma value out of range"));
    }
    let digits = bv.window(b + 1 + z as usize) & (u64::MAX >> (63 - z));
    let consumed = 1 + 2 * z as usize + 1;
    if b + consumed - 1 > bv.len() {
        return Err(GirgError::corrupt(format!("code at position {b} runs past the payload")));
    }
    let x = (digits.reverse_bits() >> (63 - z)) as i64;
    Ok((if negative { -x } else { x }, consumed))
}
