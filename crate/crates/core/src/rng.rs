// SPDX-License-Identifier: Apache-2.0

//! Counter-based random streams.
//!
//! Every random decision in the toolkit is a pure function of a small tuple of
//! integers (seed, stream, counter), so results never depend on evaluation order
//! or on how work is split across threads.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines two words into one well-mixed word.
#[inline]
pub fn combine(a: u64, b: u64) -> u64 {
    mix64(a ^ mix64(b).rotate_left(23))
}

/// Domain separation tags so that input sampling and fault sampling never share draws.
pub(crate) mod domain {
    pub const FAULT: u64 = 0x6661_756c_7400_0001;
    pub const INPUT: u64 = 0x696e_7075_7400_0002;
    pub const PLATEAU: u64 = 0x706c_6174_0000_0003;
}

/// Uniform draw in `[0, 2^bits)` for the given coordinates.
#[inline]
pub fn uniform_bits(seed: u64, stream: u64, counter: u64, bits: u32) -> u64 {
    let r = combine(combine(seed, stream), counter);
    match bits {
        0 => 0,
        b if b >= 64 => r,
        b => r >> (64 - b),
    }
}

/// Uniform draw in `[0, n)`; `n` must be positive.
#[inline]
pub fn uniform_below(seed: u64, stream: u64, counter: u64, n: u64) -> u64 {
    debug_assert!(n > 0);
    let r = combine(combine(seed, stream), counter);
    ((r as u128 * n as u128) >> 64) as u64
}

/// FNV-1a hash of a string, used to turn structural site names into keys.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(h)
}

/// Converts a probability into a threshold on a uniform 64-bit draw.
///
/// `p = 1` maps to `None`, meaning "always".
pub fn probability_threshold(p: f64) -> Option<u64> {
    if p >= 1.0 {
        None
    } else if p <= 0.0 {
        Some(0)
    } else {
        Some((p * 18_446_744_073_709_551_616.0) as u64)
    }
}
