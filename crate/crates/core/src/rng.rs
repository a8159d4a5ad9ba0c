//! Deterministic pseudo-random generation.
//!
//! Everything random in this crate (question sampling, synthetic agents,
//! seed derivation) flows through the splitmix64 stream below, so runs are
//! bit-identical across platforms and releases. The standard `rand` crate
//! deliberately does not promise stream stability across versions, which
//! would break the byte-identical-rerun guarantee.

/// splitmix64 stream (Vigna, public domain constants).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        scramble(self.state)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in 0..n via modulo. The bias (< n / 2^64) is negligible for
    /// the small ranges used here (answer choices, shuffle indices).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is undefined");
        self.next_u64() % n
    }
}

fn scramble(v: u64) -> u64 {
    let mut z = v;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a sequence of context words
/// (question hash, agent position, ...). Order-sensitive.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut x = base;
    for p in parts {
        x = scramble(x.wrapping_add(0x9E37_79B9_7F4A_7C15) ^ *p);
    }
    x
}

/// FNV-1a, used to fold string identifiers (question ids) into seeds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
