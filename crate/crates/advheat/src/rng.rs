//! Deterministic counter-based hashing PRNG.
//!
//! Every random-looking quantity in this crate is a pure function of an
//! explicit seed plus a purpose tag and counter words, so renders, attacks,
//! and experiments reproduce bit-for-bit regardless of evaluation order.

/// SplitMix64 increment.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a cheap bijective mixer with good avalanche.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Hash an ordered sequence of words into one key. Order-sensitive.
pub fn hash_words(words: &[u64]) -> u64 {
    let mut h: u64 = 0x243F_6A88_85A3_08D3;
    for &w in words {
        h = mix64(h.wrapping_add(GOLDEN) ^ w);
    }
    h
}

/// Fold a short string (purpose tags, group names) into a hash word.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325; // FNV-1a offset basis
    for &b in s.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix64(h)
}

/// Map a hash word to a float in `[0, 1)` using the top 53 bits.
#[inline]
pub fn unit_from_hash(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Stateless hash of `(seed, tag, counters...)` to `[0, 1)`.
///
/// This is the counter-based form used for per-pixel noise: no state is
/// carried between calls, so evaluation order cannot change a single sample.
pub fn unit_sample(seed: u64, tag: u64, counters: &[u64]) -> f64 {
    let mut h = mix64(seed ^ tag.wrapping_mul(GOLDEN));
    for &c in counters {
        h = mix64(h.wrapping_add(GOLDEN) ^ c);
    }
    unit_from_hash(h)
}

/// Sequential SplitMix64 stream for places that want a cursor (shuffles,
/// training batches, start-index draws). Construction from a seed or from
/// hashed key words; the stream is the same on every platform.
#[derive(Debug, Clone)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Self { state: mix64(seed ^ GOLDEN) }
    }

    pub fn from_words(words: &[u64]) -> Self {
        Self::new(hash_words(words))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform float in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        unit_from_hash(self.next_u64())
    }

    /// Uniform float in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)` via 128-bit widening multiply.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is undefined");
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}
