//! Keyed, splittable random streams.
//!
//! Every random decision in a simulation is drawn from a ChaCha stream
//! whose seed is derived from a hierarchical key: base seed → sweep point
//! → trial → (user, purpose, attempt). Trials and draws are therefore
//! reproducible independent of execution order and worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[inline]
fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// splitmix64 finalizer; a cheap bijective mixer with full avalanche.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A node in the key hierarchy. Cheap to copy; derivation never mutates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngKey(u64);

impl RngKey {
    pub fn new(base_seed: u64) -> Self {
        RngKey(mix(base_seed ^ FNV_OFFSET))
    }

    /// Child key tagged by a static purpose label.
    pub fn tagged(&self, tag: &str) -> Self {
        RngKey(mix(fnv1a(self.0, tag.as_bytes())))
    }

    /// Child key indexed by an integer (trial number, user id, ...).
    pub fn index(&self, i: u64) -> Self {
        RngKey(mix(self.0 ^ i.wrapping_mul(0x2545_f491_4f6c_dd1d)))
    }

    /// Fresh ChaCha stream for this key.
    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.0)
    }

    /// One uniform draw in [0,1) without materializing a full stream.
    pub fn unit_f64(&self) -> f64 {
        // 53 mantissa bits of the mixed state
        (mix(self.0 ^ 0x5bf0_3635) >> 11) as f64 / (1u64 << 53) as f64
    }
}
