//! Deterministic PRNG used everywhere a seed appears in a configuration.
//!
//! The algorithm is SplitMix64 (Steele, Lea & Flood's `splitmix64` finalizer).
//! It is fixed so that random trajectories, random lane seeds and search
//! helpers reproduce bit-for-bit from the same 64-bit seed on any platform.

/// SplitMix64 generator. Cheap, stateless apart from a single `u64`.
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
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-enough draw in `[0, bound)`. Modulo bias is irrelevant for the
    /// bounds used here (all far below 2^32); determinism is what matters.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }

    /// Fisher-Yates shuffle, high index down, `j = draw % (i + 1)`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
