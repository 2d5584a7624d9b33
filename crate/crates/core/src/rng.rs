//! Counter-based 64-bit mixing used for seeded tie-breaking and sampling.
//!
//! Every random draw is a pure function of its key, so streams are identical
//! on every platform and independent of evaluation order:
//!
//! ```text
//! h0      = splitmix64(seed)
//! h(k+1)  = splitmix64(h(k) ^ word(k))
//! ```
//!
//! `splitmix64` is the standard SplitMix64 finalizer (Steele, Lea, Flood).
//! Byte strings are folded to a word with 64-bit FNV-1a first.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 output function applied to `x + gamma`.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Keyed mix of a seed with an ordered sequence of words.
pub fn mix(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(splitmix64(seed), |h, &w| splitmix64(h ^ w))
}

/// Uniform integer in `[low, high]` keyed by `(seed, words)`.
///
/// Uses rejection sampling over successive attempt counters so the result is
/// exactly uniform; the attempt index is appended as the final key word.
pub fn uniform_inclusive(seed: u64, words: &[u64], low: u64, high: u64) -> u64 {
    assert!(low <= high, "empty range [{low}, {high}]");
    let span = high - low;
    if span == u64::MAX {
        return mix(seed, &with_attempt(words, 0));
    }
    let span = span + 1;
    // Largest multiple of `span` that fits; draws at or above it are rejected.
    let zone = u64::MAX - (u64::MAX % span);
    let mut attempt = 0u64;
    loop {
        let x = mix(seed, &with_attempt(words, attempt));
        if x < zone {
            return low + x % span;
        }
        attempt += 1;
    }
}

fn with_attempt(words: &[u64], attempt: u64) -> Vec<u64> {
    let mut key = Vec::with_capacity(words.len() + 1);
    key.extend_from_slice(words);
    key.push(attempt);
    key
}
