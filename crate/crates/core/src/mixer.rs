//! Counter-based mixing: every random quantity in the crate is a pure
//! function of a seed, a key domain and a short tuple of words.
//!
//! The round function is the SplitMix64 finaliser (Stafford variant 13).
//! A key is absorbed word by word, each word pre-whitened with a
//! position-dependent odd constant so permutations of a tuple hash apart.

pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Key domains; keeps streams used for different purposes disjoint.
pub mod domain {
    pub const LAYER: u64 = 0x4C41_5945_5200_0001;
    pub const OMEGA: u64 = 0x4F4D_4547_4100_0002;
    pub const SEED: u64 = 0x5345_4544_0000_0003;
    pub const SAMPLE: u64 = 0x5341_4D50_4C45_0004;
}

#[inline]
pub fn fmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn mix(seed: u64, domain: u64, words: &[u64]) -> u64 {
    let mut h = fmix64(seed ^ fmix64(domain));
    for (i, &w) in words.iter().enumerate() {
        let c = GOLDEN.wrapping_mul(2 * i as u64 + 1);
        h = fmix64(h ^ fmix64(w.wrapping_add(c)));
    }
    h
}

/// Uniform in `[0, 1)` from the top 53 bits.
#[inline]
pub fn unit(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sub-seed for item `index` of a run seeded by `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix(master, domain::SEED, &[index])
}

/// Small sequential generator on top of [`mix`], for test-side sampling.
#[derive(Debug, Clone)]
pub struct Stream {
    seed: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream { seed, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix(self.seed, domain::SAMPLE, &[self.counter])
    }

    pub fn next_f64(&mut self) -> f64 {
        unit(self.next_u64())
    }

    /// Uniform in `lo..hi` (modulo bias below 2⁻⁴⁰ for the ranges used here).
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.next_u64() % (hi - lo)
    }
}
